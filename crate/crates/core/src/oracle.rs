//! Exhaustive enumeration of small unlabelled k-trees and their rooted and
//! cycle-pointed variants.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ktrees::{automorphism_census, canonical_form, front_rooted_code, hedron_rooted_code, KTree};
use crate::partitions::Permutation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("n = {n} exceeds the oracle bound {bound} for k = {k}")]
    TooLarge { k: usize, n: usize, bound: usize },
    #[error("index {index} out of range for {count} classes")]
    OutOfRange { index: usize, count: usize },
    #[error("k and n must be positive")]
    BadParameters,
    #[error("tree does not belong to the enumerated level")]
    Unknown,
}

/// Default largest `n` per `k`.
pub fn default_bound(k: usize) -> usize {
    match k {
        1 => 12,
        2 => 8,
        3 => 6,
        4 => 5,
        _ => 4,
    }
}

fn check(k: usize, n: usize, bound: usize) -> Result<(), OracleError> {
    if k == 0 || n == 0 {
        return Err(OracleError::BadParameters);
    }
    if n > bound {
        return Err(OracleError::TooLarge { k, n, bound });
    }
    Ok(())
}

/// One representative per isomorphism class, sorted by canonical form.
#[derive(Clone, Debug)]
pub struct Level {
    pub forms: Vec<Vec<u8>>,
    pub trees: Vec<KTree>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

fn grow(prev: &Level) -> Level {
    let children: Vec<(Vec<u8>, KTree)> = prev
        .trees
        .par_iter()
        .flat_map_iter(|t| {
            let mut seen: HashMap<Vec<u8>, KTree> = HashMap::new();
            for f in t.fronts() {
                let child = t.attach(f.vertices()).expect("front of the tree").sorted();
                seen.entry(canonical_form(&child)).or_insert(child);
            }
            seen.into_iter()
        })
        .collect();
    let mut best: HashMap<Vec<u8>, KTree> = HashMap::new();
    for (form, t) in children {
        match best.get(&form) {
            Some(old) if old.to_string() <= t.to_string() => {}
            _ => {
                best.insert(form, t);
            }
        }
    }
    let mut pairs: Vec<(Vec<u8>, KTree)> = best.into_iter().collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    let (forms, trees) = pairs.into_iter().unzip();
    Level { forms, trees }
}

/// Levels `1..=n`.
pub fn enumerate_levels(k: usize, n: usize, bound: usize) -> Result<Vec<Level>, OracleError> {
    check(k, n, bound)?;
    let single = KTree::single_hedron(k);
    let mut levels = vec![Level {
        forms: vec![canonical_form(&single)],
        trees: vec![single],
    }];
    while levels.len() < n {
        let next = grow(levels.last().expect("nonempty"));
        levels.push(next);
    }
    Ok(levels)
}

pub fn enumerate_level(k: usize, n: usize) -> Result<Level, OracleError> {
    Ok(enumerate_levels(k, n, default_bound(k))?.pop().expect("n >= 1"))
}

pub fn enumerate_unlabelled(k: usize, n: usize) -> Result<Vec<KTree>, OracleError> {
    Ok(enumerate_level(k, n)?.trees)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootKind {
    Hedron,
    FrontDistinguishable,
    FrontDistinguishableUniqueHedron,
}

impl std::str::FromStr for RootKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hedron" => Ok(RootKind::Hedron),
            "front" | "front_distinguishable" => Ok(RootKind::FrontDistinguishable),
            "unique" | "front_distinguishable_unique_hedron" => Ok(RootKind::FrontDistinguishableUniqueHedron),
            _ => Err(format!("unknown root kind {s}")),
        }
    }
}

/// A rooted class: the tree and its root (a hedron index, or an ordered front).
#[derive(Clone, Debug)]
pub struct RootedClass {
    pub tree: KTree,
    pub root: Vec<usize>,
}

/// Classes of `(tree, root)` pairs of size `n`.
pub fn enumerate_rooted(k: usize, n: usize, kind: RootKind) -> Result<Vec<RootedClass>, OracleError> {
    let level = enumerate_level(k, n)?;
    Ok(rooted_classes(&level, kind))
}

pub fn rooted_classes(level: &Level, kind: RootKind) -> Vec<RootedClass> {
    let per_tree: Vec<Vec<(Vec<u8>, RootedClass)>> = level
        .trees
        .par_iter()
        .map(|t| {
            let mut out = Vec::new();
            match kind {
                RootKind::Hedron => {
                    for h in 0..t.n() {
                        out.push((
                            hedron_rooted_code(t, h),
                            RootedClass {
                                tree: t.clone(),
                                root: vec![h],
                            },
                        ));
                    }
                }
                RootKind::FrontDistinguishable | RootKind::FrontDistinguishableUniqueHedron => {
                    let map = t.front_map();
                    for f in t.fronts() {
                        if kind == RootKind::FrontDistinguishableUniqueHedron && map[f.vertices()].len() != 1 {
                            continue;
                        }
                        for p in Permutation::all(t.k()) {
                            let ordered: Vec<usize> = (0..t.k()).map(|i| f.vertices()[p.apply(i)]).collect();
                            out.push((
                                front_rooted_code(t, &ordered),
                                RootedClass {
                                    tree: t.clone(),
                                    root: ordered,
                                },
                            ));
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut classes = Vec::new();
    for list in per_tree {
        for (code, class) in list {
            if seen.insert(code) {
                classes.push(class);
            }
        }
    }
    classes
}

/// Cycle-pointed classes of size `n`, split by the position of the cycle centre.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Census {
    pub k: usize,
    pub n: usize,
    /// Pointed at a single hedron.
    pub v1: u64,
    /// Cycle centre is a hedron.
    pub v2: u64,
    /// Cycle centre is a front, no automorphism fixing it pointwise carries the cycle.
    pub v3_sym: u64,
    /// Cycle centre is a front fixed pointwise by an automorphism carrying the cycle.
    pub v3_dec: u64,
    /// `Σ 1/|Stab|` over the `v3_dec` classes, as "num/den".
    #[serde(serialize_with = "ser_rational")]
    pub dec_weight: BigRational,
}

fn ser_rational<S: serde::Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

impl Census {
    pub fn total(&self) -> u64 {
        self.v1 + self.v2 + self.v3_sym + self.v3_dec
    }

    /// Mass of cycle-pointed classes outside the pointed sampler's reach.
    pub fn unreachable(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.v2 + self.v3_sym + self.v3_dec)) - &self.dec_weight
    }

    fn add(&mut self, other: &Census) {
        self.v1 += other.v1;
        self.v2 += other.v2;
        self.v3_sym += other.v3_sym;
        self.v3_dec += other.v3_dec;
        self.dec_weight += &other.dec_weight;
    }

    fn empty(k: usize, n: usize) -> Census {
        Census {
            k,
            n,
            v1: 0,
            v2: 0,
            v3_sym: 0,
            v3_dec: 0,
            dec_weight: BigRational::zero(),
        }
    }
}

/// Cycles as sequences starting at their least element.
fn normalise(c: &[usize]) -> Vec<usize> {
    let m = (0..c.len()).min_by_key(|&i| c[i]).expect("nonempty cycle");
    c[m..].iter().chain(c[..m].iter()).copied().collect()
}

/// Hedron/front incidence tree: nodes `0..n` are hedra, `n..` fronts.
struct Incidence {
    fronts: Vec<Vec<usize>>,
    adj: Vec<Vec<usize>>,
}

impl Incidence {
    fn new(t: &KTree) -> Self {
        let mut fronts: Vec<Vec<usize>> = t.front_map().into_keys().collect();
        fronts.sort();
        let index: HashMap<&Vec<usize>, usize> = fronts.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let n = t.n();
        let mut adj = vec![Vec::new(); n + fronts.len()];
        for h in 0..n {
            for f in t.hedron_fronts(h) {
                let w = n + index[&f.vertices().to_vec()];
                adj[h].push(w);
                adj[w].push(h);
            }
        }
        Incidence { fronts, adj }
    }

    fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.adj.len()];
        parent[a] = a;
        let mut queue = std::collections::VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            if x == b {
                break;
            }
            for &y in &self.adj[x] {
                if parent[y] == usize::MAX {
                    parent[y] = x;
                    queue.push_back(y);
                }
            }
        }
        let mut path = vec![b];
        while *path.last().expect("nonempty") != a {
            path.push(parent[*path.last().expect("nonempty")]);
        }
        path
    }
}

/// Census of one class: orbits of automorphism cycles under conjugation.
pub fn tree_census(t: &KTree) -> Census {
    let n = t.n();
    let aut = automorphism_census(t, usize::MAX).expect("no bound");
    let mut cycles: HashSet<Vec<usize>> = HashSet::new();
    for g in &aut.group {
        for c in g.cycles() {
            cycles.insert(normalise(&c));
        }
    }
    let mut cycles: Vec<Vec<usize>> = cycles.into_iter().collect();
    cycles.sort();
    let inc = Incidence::new(t);
    let mut done: HashSet<Vec<usize>> = HashSet::new();
    let mut census = Census::empty(t.k(), n);
    for c in cycles {
        if done.contains(&c) {
            continue;
        }
        for g in &aut.group {
            let img: Vec<usize> = c.iter().map(|&h| g.apply(h)).collect();
            done.insert(normalise(&img));
        }
        if c.len() == 1 {
            census.v1 += 1;
            continue;
        }
        let path = inc.path(c[0], c[1]);
        let mid = path[path.len() / 2];
        if mid < n {
            census.v2 += 1;
            continue;
        }
        let f = &inc.fronts[mid - n];
        let carries = |h: &Permutation| (0..c.len()).all(|i| h.apply(c[i]) == c[(i + 1) % c.len()]);
        let dec = aut
            .vertex_maps
            .iter()
            .zip(&aut.hedron_maps)
            .any(|(g, h)| f.iter().all(|&v| g.apply(v) == v) && carries(h));
        if !dec {
            census.v3_sym += 1;
            continue;
        }
        census.v3_dec += 1;
        let stab: HashSet<Vec<usize>> = aut
            .vertex_maps
            .iter()
            .zip(&aut.hedron_maps)
            .filter(|(_, h)| normalise(&c.iter().map(|&x| h.apply(x)).collect::<Vec<_>>()) == c)
            .map(|(g, _)| f.iter().map(|&v| g.apply(v)).collect())
            .collect();
        census.dec_weight += BigRational::new(BigInt::from(1), BigInt::from(stab.len()));
    }
    census
}

pub fn cycle_pointing_census(k: usize, n: usize) -> Result<Census, OracleError> {
    let level = enumerate_level(k, n)?;
    Ok(level_census(k, n, &level))
}

pub fn level_census(k: usize, n: usize, level: &Level) -> Census {
    let parts: Vec<Census> = level.trees.par_iter().map(tree_census).collect();
    let mut total = Census::empty(k, n);
    for p in &parts {
        total.add(p);
    }
    total
}

/// The `index`-th class of size `n` in canonical-form order.
pub fn unrank(k: usize, n: usize, index: usize) -> Result<KTree, OracleError> {
    let level = enumerate_level(k, n)?;
    level.trees.get(index).cloned().ok_or(OracleError::OutOfRange {
        index,
        count: level.len(),
    })
}

/// Position of the class of `t` in canonical-form order.
pub fn rank(t: &KTree) -> Result<usize, OracleError> {
    let level = enumerate_level(t.k(), t.n())?;
    rank_in(&level, t)
}

pub fn rank_in(level: &Level, t: &KTree) -> Result<usize, OracleError> {
    level
        .forms
        .binary_search(&canonical_form(t))
        .map_err(|_| OracleError::Unknown)
}
