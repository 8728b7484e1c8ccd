//! Uniform random generation of coloured, rooted and unrooted unlabelled
//! k-trees of a given size.
//!
//! Objects are grown as coding trees in an arena of black nodes (hedra);
//! each node lists its children as `(front colour, child)`. A node's parent
//! front is implicit. Recolouring a subtree by a colour permutation is a deep
//! copy with mapped edge colours, which is how orbit components and cycle
//! replicas are materialised.
//!
//! Choice probabilities come from the generating-function recurrences run in
//! `f64` on `ρ`-scaled coefficients.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_traits::ToPrimitive;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constants::{rho_f64, ConstantsError};
use crate::gfsystem::{build_families, pointed_pieces, pointing_defect_with, Embedding, Families, Scaled, SeriesTable};
use crate::ktrees::KTree;
use crate::oracle::{default_bound, enumerate_levels, Level};
use crate::partitions::{partitions_of, CycleType, Permutation};

/// Largest `n` for which the defect is computed in exact rationals.
pub const EXACT_DEFECT_LIMIT: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("no objects of size {n}")]
    Empty { n: usize },
    #[error("size {n} exceeds the sampler truncation {trunc}")]
    TooLarge { n: usize, trunc: usize },
    #[error("oracle mode needs n <= {bound}, got {n}")]
    OracleBound { n: usize, bound: usize },
    #[error("cycle type {0} does not match k")]
    BadType(String),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
}

/// A ChaCha8 stream: `seed` selects the key and `stream` an independent
/// sequence, so sample `i` of a batch is reproducible regardless of threads.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Auto,
    Oracle,
    Pointed,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Mode::Auto),
            "oracle" => Ok(Mode::Oracle),
            "pointed" => Ok(Mode::Pointed),
            _ => Err(format!("unknown mode {s}")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Auto => "auto",
            Mode::Oracle => "oracle",
            Mode::Pointed => "pointed",
        })
    }
}

/// Which part of the unrooted sampler produced a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Part {
    Oracle,
    V1,
    V3dec,
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub tree: KTree,
    pub part: Part,
    /// Root-hedron cycle type, for the hedron-rooted part.
    pub lambda: Option<CycleType>,
}

/// Total-variation distance between the emitted and the uniform law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Defect {
    pub value: f64,
    /// Exact rational when `n <= EXACT_DEFECT_LIMIT`.
    pub exact: Option<String>,
}

impl Defect {
    fn zero() -> Self {
        Defect {
            value: 0.0,
            exact: Some("0".into()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub k: usize,
    pub n: usize,
    pub mode: Mode,
    pub seed: u64,
    pub samples: Vec<Sample>,
    pub defect: Defect,
}

impl SampleBatch {
    pub fn trees(&self) -> impl Iterator<Item = &KTree> {
        self.samples.iter().map(|s| &s.tree)
    }

    pub fn part_counts(&self) -> HashMap<Part, usize> {
        let mut out = HashMap::new();
        for s in &self.samples {
            *out.entry(s.part).or_insert(0) += 1;
        }
        out
    }

    pub fn lambda_counts(&self) -> Vec<(String, usize)> {
        let mut map: HashMap<String, usize> = HashMap::new();
        for s in &self.samples {
            if let Some(l) = &s.lambda {
                *map.entry(l.to_string()).or_insert(0) += 1;
            }
        }
        let mut v: Vec<_> = map.into_iter().collect();
        v.sort();
        v
    }

    /// Metadata sidecar.
    pub fn summary(&self) -> serde_json::Value {
        let mut parts: Vec<(String, serde_json::Value)> = self
            .part_counts()
            .into_iter()
            .map(|(p, c)| (format!("{p:?}"), serde_json::Value::from(c)))
            .collect();
        parts.sort_by(|a, b| a.0.cmp(&b.0));
        serde_json::json!({
            "k": self.k,
            "n": self.n,
            "mode": self.mode,
            "seed": self.seed,
            "count": self.samples.len(),
            "defect": self.defect,
            "parts": parts.into_iter().collect::<serde_json::Map<String, serde_json::Value>>(),
            "lambda": self.lambda_counts().into_iter().map(|(l, c)| (l, serde_json::Value::from(c))).collect::<serde_json::Map<_, _>>(),
        })
    }
}

/// Colour maps on `{0, …, k}` as image vectors.
type Cmap = Vec<u8>;

fn compose(a: &[u8], b: &[u8]) -> Cmap {
    b.iter().map(|&i| a[i as usize]).collect()
}

fn inverse(a: &[u8]) -> Cmap {
    let mut inv = vec![0u8; a.len()];
    for (i, &j) in a.iter().enumerate() {
        inv[j as usize] = i as u8;
    }
    inv
}

fn power(a: &[u8], d: usize) -> Cmap {
    let mut out: Cmap = (0..a.len() as u8).collect();
    for _ in 0..d {
        out = compose(a, &out);
    }
    out
}

fn swap(len: usize, x: usize, y: usize) -> Cmap {
    let mut out: Cmap = (0..len as u8).collect();
    out.swap(x, y);
    out
}

fn is_identity(a: &[u8]) -> bool {
    a.iter().enumerate().all(|(i, &j)| i == j as usize)
}

fn cycles(a: &[u8]) -> Vec<Vec<usize>> {
    Permutation::new(a.iter().map(|&x| x as usize).collect())
        .expect("permutation")
        .cycles()
}

/// Arena of coloured black nodes.
#[derive(Clone, Debug, Default)]
pub struct Arena {
    kids: Vec<Vec<(u8, u32)>>,
}

impl Arena {
    fn node(&mut self) -> u32 {
        self.kids.push(Vec::new());
        (self.kids.len() - 1) as u32
    }

    /// Deep copy of the subtree at `root` with edge colours mapped by `phi`.
    fn copy(&mut self, root: u32, phi: &[u8]) -> u32 {
        let new_root = self.node();
        let mut stack = vec![(root, new_root)];
        while let Some((old, new)) = stack.pop() {
            for i in 0..self.kids[old as usize].len() {
                let (c, child) = self.kids[old as usize][i];
                let copy = self.node();
                self.kids[new as usize].push((phi[c as usize], copy));
                stack.push((child, copy));
            }
        }
        new_root
    }

    /// Hedra reached from `roots`, whose parent front carries `front`
    /// (vertex by colour, `usize::MAX` at the front's own colour).
    fn decode_into(&self, roots: &[(u8, u32)], start: Vec<usize>, next: &mut usize, hedra: &mut Vec<Vec<usize>>) {
        let mut stack: Vec<(u32, Vec<usize>)> = Vec::new();
        for &(c, b) in roots {
            let mut verts = start.clone();
            verts[c as usize] = *next;
            *next += 1;
            stack.push((b, verts));
        }
        while let Some((b, verts)) = stack.pop() {
            let mut h = verts.clone();
            h.sort_unstable();
            hedra.push(h);
            for &(c, child) in &self.kids[b as usize] {
                let mut v = verts.clone();
                v[c as usize] = *next;
                *next += 1;
                stack.push((child, v));
            }
        }
    }

    /// The k-tree of a coding tree rooted at black `root`; its vertex of colour `c` is `c`.
    pub fn decode_black(&self, k: usize, root: u32) -> KTree {
        let mut hedra = vec![(0..=k).collect::<Vec<usize>>()];
        let mut next = k + 1;
        let verts: Vec<usize> = (0..=k).collect();
        self.decode_into(&self.kids[root as usize], verts, &mut next, &mut hedra);
        KTree::new(k, hedra).expect("decoded coding trees are k-trees")
    }

    /// The k-tree of black nodes hung at a root front of colour `k`; the
    /// front's vertex of colour `c < k` is `c`.
    pub fn decode_front(&self, k: usize, roots: &[u32]) -> KTree {
        let mut hedra = Vec::new();
        let mut next = k;
        let mut verts: Vec<usize> = (0..k).collect();
        verts.push(usize::MAX);
        let tagged: Vec<(u8, u32)> = roots.iter().map(|&b| (k as u8, b)).collect();
        self.decode_into(&tagged, verts, &mut next, &mut hedra);
        KTree::new(k, hedra).expect("decoded coding trees are k-trees")
    }
}

/// Picks an index in `0..len` with probability `weight(i)/total`, scanning
/// inwards from both ends so that choices near either end are cheap.
fn choose_two_ended<R: Rng + ?Sized>(len: usize, total: f64, weight: impl Fn(usize) -> f64, rng: &mut R) -> usize {
    debug_assert!(len > 0);
    let u = rng.gen::<f64>() * total;
    let (mut lo, mut hi) = (0usize, len - 1);
    let (mut acc_lo, mut acc_hi) = (0.0, 0.0);
    loop {
        let w = weight(lo);
        acc_lo += w;
        if u < acc_lo && w > 0.0 {
            return lo;
        }
        if lo == hi {
            break;
        }
        lo += 1;
        let w = weight(hi);
        acc_hi += w;
        if u >= total - acc_hi && w > 0.0 {
            return hi;
        }
        if lo == hi {
            break;
        }
        hi -= 1;
    }
    // rounding left `u` unmatched: fall back to an exact scan
    let sum: f64 = (0..len).map(&weight).sum();
    let u = rng.gen::<f64>() * sum;
    let mut acc = 0.0;
    let mut last = 0;
    for i in 0..len {
        let w = weight(i);
        if w > 0.0 {
            last = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Exact uniform samplers driven by one weight table.
pub struct Sampler {
    k: usize,
    trunc: usize,
    emb: Scaled,
    fam: Families<f64>,
    mu_index: HashMap<CycleType, usize>,
    lambda_index: HashMap<CycleType, usize>,
    lambda_zinv: Vec<f64>,
    oracle_bound: usize,
    levels: Mutex<Option<Arc<Vec<Level>>>>,
    defects: Mutex<HashMap<usize, Defect>>,
}

impl Sampler {
    /// Weight tables up to size `trunc`; building costs `O(trunc²)`.
    pub fn new(k: usize, trunc: usize) -> Result<Self, SamplerError> {
        let rho = rho_f64(k)?;
        Ok(Self::with_scale(k, trunc, rho))
    }

    pub fn with_scale(k: usize, trunc: usize, r: f64) -> Self {
        let trunc = trunc.max(1);
        let emb = Scaled::new(r, (k + 1) * trunc + 1);
        let fam = build_families::<f64, _>(k, trunc, &emb);
        let mu_index = fam.mu.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let lambda_index = fam.lambda.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let lambda_zinv = fam.lambda.iter().map(|l| 1.0 / l.z().to_f64().expect("finite")).collect();
        Sampler {
            k,
            trunc,
            emb,
            fam,
            mu_index,
            lambda_index,
            lambda_zinv,
            oracle_bound: default_bound(k),
            levels: Mutex::new(None),
            defects: Mutex::new(HashMap::new()),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn oracle_bound(&self) -> usize {
        self.oracle_bound
    }

    pub fn set_oracle_bound(&mut self, bound: usize) {
        self.oracle_bound = bound;
        *self.levels.lock().expect("lock") = None;
    }

    fn check(&self, n: usize) -> Result<(), SamplerError> {
        if n > self.trunc {
            return Err(SamplerError::TooLarge { n, trunc: self.trunc });
        }
        Ok(())
    }

    /// Index of the family of a colour map fixing colour `k`.
    fn family(&self, pi: &[u8]) -> usize {
        if is_identity(pi) {
            return self.fam.identity();
        }
        let p = Permutation::new(pi.iter().map(|&x| x as usize).collect()).expect("permutation");
        self.mu_index[&p.cycle_type_excluding(&[self.k])]
    }

    fn lambda_family(&self, pi: &[u8]) -> usize {
        let p = Permutation::new(pi.iter().map(|&x| x as usize).collect()).expect("permutation");
        self.lambda_index[&p.cycle_type()]
    }

    fn identity_map(&self) -> Cmap {
        (0..=self.k as u8).collect()
    }

    /// Per-factor sizes of a product class at degree `m`, chosen from the prefix products.
    fn choose_sizes<R: Rng + ?Sized>(
        &self,
        factors: &[(usize, usize)],
        prefix: &[Vec<f64>],
        mut m: usize,
        rng: &mut R,
    ) -> Vec<usize> {
        let mut sizes = vec![0usize; factors.len()];
        for t in (0..factors.len()).rev() {
            let (i, nu) = factors[t];
            if t == 0 {
                debug_assert_eq!(m % i, 0);
                sizes[0] = m / i;
                break;
            }
            let c = &self.fam.c[nu];
            let prev = &prefix[t - 1];
            let j = choose_two_ended(
                m / i + 1,
                prefix[t][m],
                |j| self.emb.lift(&c[j], j, i) * prev[m - i * j],
                rng,
            );
            sizes[t] = j;
            m -= i * j;
        }
        sizes
    }

    /// Cycles of `pi` matched to the family's factor list by length.
    fn match_cycles(factors: &[(usize, usize)], mut cycles: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        factors
            .iter()
            .map(|&(i, _)| {
                let pos = cycles.iter().position(|c| c.len() == i).expect("cycle of each factor length");
                cycles.swap_remove(pos)
            })
            .collect()
    }

    /// Hangs `π`-replicas of the C-object for one cycle of a product class.
    #[allow(clippy::too_many_arguments)]
    fn attach_cycle<R: Rng + ?Sized>(
        &self,
        arena: &mut Arena,
        node: u32,
        pi: &[u8],
        cycle: &[usize],
        inner: &[u8],
        size: usize,
        out: &[u8],
        rng: &mut R,
    ) {
        if size == 0 {
            return;
        }
        let d = cycle[0];
        let tau = swap(self.k + 1, d, self.k);
        let out_tau = compose(out, &tau);
        let mut blacks = Vec::new();
        self.sample_c_into(arena, inner, size, &out_tau, rng, &mut blacks);
        for &b in &blacks {
            arena.kids[node as usize].push((out[d], b));
        }
        let out_inv = inverse(out);
        let mut pj = self.identity_map();
        for _ in 1..cycle.len() {
            pj = compose(pi, &pj);
            let phi = compose(out, &compose(&pj, &out_inv));
            let colour = out[pj[d] as usize];
            for &b in &blacks {
                let copy = arena.copy(b, &phi);
                arena.kids[node as usize].push((colour, copy));
            }
        }
    }

    /// A `π`-fixed multiset of black-rooted reduced trees of total size `n`,
    /// appended to `dest` in output colours `out`.
    fn sample_c_into<R: Rng + ?Sized>(
        &self,
        arena: &mut Arena,
        pi: &[u8],
        n: usize,
        out: &[u8],
        rng: &mut R,
        dest: &mut Vec<u32>,
    ) {
        let idx = self.family(pi);
        let a = &self.fam.a[idx];
        let c = &self.fam.c[idx];
        let out_inv = inverse(out);
        let mut n = n;
        while n > 0 {
            let nn = n;
            let m = 1 + choose_two_ended(nn, nn as f64 * c[nn], |s| a[s + 1] * c[nn - s - 1], rng);
            let divisors: Vec<usize> = (1..=m).filter(|d| m % d == 0).collect();
            let powers = &self.fam.mu_power[idx];
            let w = |t: usize| {
                let d = divisors[t];
                let j = m / d;
                self.emb.lift(&self.fam.bbar[powers[d]][j], j, d) * j as f64
            };
            let total: f64 = (0..divisors.len()).map(w).sum();
            let d = divisors[choose_two_ended(divisors.len(), total, w, rng)];
            let pid = power(pi, d);
            let first = self.sample_bbar_node(arena, &pid, m / d, out, rng);
            dest.push(first);
            let mut pt = self.identity_map();
            for _ in 1..d {
                pt = compose(pi, &pt);
                let phi = compose(out, &compose(&pt, &out_inv));
                dest.push(arena.copy(first, &phi));
            }
            n -= m;
        }
    }

    /// A `π`-fixed black-rooted reduced tree of size `n` (`n >= 1`).
    fn sample_bbar_node<R: Rng + ?Sized>(&self, arena: &mut Arena, pi: &[u8], n: usize, out: &[u8], rng: &mut R) -> u32 {
        let node = arena.node();
        let idx = self.family(pi);
        let factors = &self.fam.mu_factors[idx];
        let sizes = self.choose_sizes(factors, &self.fam.mu_prefix[idx], n - 1, rng);
        let cyc: Vec<Vec<usize>> = cycles(pi).into_iter().filter(|c| c[0] != self.k).collect();
        let cyc = Self::match_cycles(factors, cyc);
        for (t, cycle) in cyc.iter().enumerate() {
            let inner = power(pi, cycle.len());
            self.attach_cycle(arena, node, pi, cycle, &inner, sizes[t], out, rng);
        }
        node
    }

    /// A `π`-fixed black-rooted tree of size `n`, for `π` on all `k+1` colours.
    fn sample_b_node<R: Rng + ?Sized>(&self, arena: &mut Arena, pi: &[u8], n: usize, rng: &mut R) -> u32 {
        let out = self.identity_map();
        let node = arena.node();
        let idx = self.lambda_family(pi);
        let factors = &self.fam.lambda_factors[idx];
        let sizes = self.choose_sizes(factors, &self.fam.lambda_prefix[idx], n - 1, rng);
        let cyc = Self::match_cycles(factors, cycles(pi));
        for (t, cycle) in cyc.iter().enumerate() {
            let d = cycle[0];
            let tau = swap(self.k + 1, d, self.k);
            let inner = compose(&tau, &compose(&power(pi, cycle.len()), &tau));
            self.attach_cycle(arena, node, pi, cycle, &inner, sizes[t], &out, rng);
        }
        node
    }

    fn mu_map(&self, mu: &CycleType) -> Result<Cmap, SamplerError> {
        if mu.size() != self.k {
            return Err(SamplerError::BadType(mu.to_string()));
        }
        let mut m: Cmap = mu.canonical_permutation().images().iter().map(|&x| x as u8).collect();
        m.push(self.k as u8);
        Ok(m)
    }

    /// Uniform `σ_μ`-fixed C-object of size `n`, decoded with the root front on vertices `0..k`.
    pub fn sample_multiset_class<R: Rng + ?Sized>(&self, mu: &CycleType, n: usize, rng: &mut R) -> Result<(Arena, Vec<u32>), SamplerError> {
        self.check(n)?;
        let pi = self.mu_map(mu)?;
        if self.fam.c[self.family(&pi)][n] <= 0.0 {
            return Err(SamplerError::Empty { n });
        }
        let mut arena = Arena::default();
        let mut roots = Vec::new();
        self.sample_c_into(&mut arena, &pi, n, &self.identity_map(), rng, &mut roots);
        Ok((arena, roots))
    }

    /// Uniform `σ_μ`-fixed black-rooted reduced tree of size `n`.
    pub fn sample_product_class<R: Rng + ?Sized>(&self, mu: &CycleType, n: usize, rng: &mut R) -> Result<(Arena, u32), SamplerError> {
        self.check(n)?;
        let pi = self.mu_map(mu)?;
        if n == 0 || self.fam.bbar[self.family(&pi)][n] <= 0.0 {
            return Err(SamplerError::Empty { n });
        }
        let mut arena = Arena::default();
        let root = self.sample_bbar_node(&mut arena, &pi, n, &self.identity_map(), rng);
        Ok((arena, root))
    }

    /// Uniform `σ_λ`-fixed black-rooted tree of size `n`, `λ ⊢ k+1`.
    pub fn sample_black_rooted_class<R: Rng + ?Sized>(&self, lambda: &CycleType, n: usize, rng: &mut R) -> Result<(Arena, u32), SamplerError> {
        self.check(n)?;
        if lambda.size() != self.k + 1 {
            return Err(SamplerError::BadType(lambda.to_string()));
        }
        let pi: Cmap = lambda.canonical_permutation().images().iter().map(|&x| x as u8).collect();
        if n == 0 || self.fam.b_lambda[self.lambda_family(&pi)][n] <= 0.0 {
            return Err(SamplerError::Empty { n });
        }
        let mut arena = Arena::default();
        let root = self.sample_b_node(&mut arena, &pi, n, rng);
        Ok((arena, root))
    }

    /// Exact `λ` marginal of the hedron-rooted sampler at size `n`.
    pub fn lambda_marginal(&self, n: usize) -> Vec<(CycleType, f64)> {
        let w: Vec<f64> = (0..self.fam.lambda.len())
            .map(|i| self.fam.b_lambda[i][n] * self.lambda_zinv[i])
            .collect();
        let total: f64 = w.iter().sum();
        self.fam.lambda.iter().cloned().zip(w.into_iter().map(|x| x / total)).collect()
    }

    fn b_hat(&self, n: usize) -> f64 {
        (0..self.fam.lambda.len())
            .map(|i| self.fam.b_lambda[i][n] * self.lambda_zinv[i])
            .sum()
    }

    /// Uniform hedron-rooted unlabelled k-tree of size `n`; the root is hedron `{0, …, k}`.
    pub fn sample_hedron_rooted<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(KTree, CycleType), SamplerError> {
        self.check(n)?;
        if n == 0 {
            return Err(SamplerError::Empty { n });
        }
        let nl = self.fam.lambda.len();
        let total = self.b_hat(n);
        let li = choose_two_ended(nl, total, |i| self.fam.b_lambda[i][n] * self.lambda_zinv[i], rng);
        let lambda = self.fam.lambda[li].clone();
        let (arena, root) = self.sample_black_rooted_class(&lambda, n, rng)?;
        Ok((arena.decode_black(self.k, root), lambda))
    }

    /// `(B̄^∘w)`-weighted branch sizes: weight of `(ℓ, s)` at size `n`.
    fn decoupled_options(&self, n: usize) -> (Vec<(usize, usize)>, Vec<f64>) {
        let id = self.fam.identity();
        let b = &self.fam.bbar[id];
        let c = &self.fam.c[id];
        let mut opts = Vec::new();
        let mut w = Vec::new();
        for l in 2..=n {
            for s in 1..=n / l {
                let x = s as f64 * self.emb.lift(&b[s], s, l) * c[n - l * s];
                if x > 0.0 {
                    opts.push((l, s));
                    w.push(x);
                }
            }
        }
        (opts, w)
    }

    fn kfact(&self) -> f64 {
        (1..=self.k).map(|i| i as f64).product()
    }

    /// Scaled weights of the hedron-pointed and decoupled parts.
    pub fn part_weights(&self, n: usize) -> (f64, f64) {
        let (_, w) = self.decoupled_options(n);
        (self.b_hat(n), w.iter().sum::<f64>() / self.kfact())
    }

    /// One tree from the cycle-pointed mixture.
    pub fn sample_pointed<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample, SamplerError> {
        self.check(n)?;
        if n == 0 {
            return Err(SamplerError::Empty { n });
        }
        let (opts, w) = self.decoupled_options(n);
        let wdec: f64 = w.iter().sum::<f64>() / self.kfact();
        let wb = self.b_hat(n);
        if rng.gen::<f64>() * (wb + wdec) < wb {
            let (tree, lambda) = self.sample_hedron_rooted(n, rng)?;
            return Ok(Sample {
                tree,
                part: Part::V1,
                lambda: Some(lambda),
            });
        }
        let (l, s) = opts[choose_two_ended(opts.len(), wdec * self.kfact(), |i| w[i], rng)];
        let id = self.identity_map();
        let mut arena = Arena::default();
        let branch = self.sample_bbar_node(&mut arena, &id, s, &id, rng);
        let mut roots = vec![branch];
        for _ in 1..l {
            roots.push(arena.copy(branch, &id));
        }
        self.sample_c_into(&mut arena, &id, n - l * s, &id, rng, &mut roots);
        Ok(Sample {
            tree: arena.decode_front(self.k, &roots),
            part: Part::V3dec,
            lambda: None,
        })
    }

    fn levels(&self) -> Arc<Vec<Level>> {
        let mut guard = self.levels.lock().expect("lock");
        if guard.is_none() {
            let bound = self.oracle_bound;
            *guard = Some(Arc::new(enumerate_levels(self.k, bound, bound).expect("within bound")));
        }
        guard.as_ref().expect("filled").clone()
    }

    /// Exactly uniform unrooted tree by unranking a uniform index.
    pub fn sample_oracle<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample, SamplerError> {
        if n == 0 {
            return Err(SamplerError::Empty { n });
        }
        if n > self.oracle_bound {
            return Err(SamplerError::OracleBound {
                n,
                bound: self.oracle_bound,
            });
        }
        let levels = self.levels();
        let level = &levels[n - 1];
        let i = rng.gen_range(0..level.len());
        Ok(Sample {
            tree: level.trees[i].clone(),
            part: Part::Oracle,
            lambda: None,
        })
    }

    fn resolve(&self, n: usize, mode: Mode) -> Mode {
        match mode {
            Mode::Auto if n <= self.oracle_bound => Mode::Oracle,
            Mode::Auto => Mode::Pointed,
            m => m,
        }
    }

    pub fn sample_unrooted<R: Rng + ?Sized>(&self, n: usize, mode: Mode, rng: &mut R) -> Result<Sample, SamplerError> {
        match self.resolve(n, mode) {
            Mode::Oracle => self.sample_oracle(n, rng),
            _ => self.sample_pointed(n, rng),
        }
    }

    /// Distance from uniform of the pointed mixture at size `n`.
    pub fn defect(&self, n: usize) -> Defect {
        if let Some(d) = self.defects.lock().expect("lock").get(&n) {
            return d.clone();
        }
        let d = if n <= EXACT_DEFECT_LIMIT {
            let t = SeriesTable::build(self.k, n.max(1)).expect("valid parameters");
            let q = pointing_defect_with(&t, &pointed_pieces(&t), n).expect("nonnegative defect");
            Defect {
                value: crate::powerseries::rational_to_f64(&q),
                exact: Some(q.to_string()),
            }
        } else {
            Defect {
                value: self.defect_estimate(n).max(0.0),
                exact: None,
            }
        };
        self.defects.lock().expect("lock").insert(n, d.clone());
        d
    }

    /// Floating-point `(nU − B − V3dec)/(nU)`; cancellation limits it to about `1e-12`.
    pub fn defect_estimate(&self, n: usize) -> f64 {
        let f = &self.fam;
        let mut c_sum = 0.0;
        let mut e_sum = 0.0;
        for (i, mu) in f.mu.iter().enumerate() {
            let z = mu.z().to_f64().expect("finite");
            c_sum += f.c[i][n] / z;
            let conv: f64 = (0..=n).map(|j| f.bbar[i][j] * f.c[i][n - j]).sum();
            e_sum += conv / z;
        }
        let (wb, wdec) = self.part_weights(n);
        let nu = n as f64 * (wb + c_sum - e_sum);
        (nu - wb - wdec) / nu
    }

    /// `count` trees; sample `i` uses stream `i` of `seed`.
    pub fn sample_batch(&self, n: usize, count: usize, seed: u64, mode: Mode) -> Result<SampleBatch, SamplerError> {
        let resolved = self.resolve(n, mode);
        if resolved == Mode::Oracle {
            self.levels();
        }
        let samples: Result<Vec<Sample>, SamplerError> = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(seed, i as u64);
                self.sample_unrooted(n, resolved, &mut rng)
            })
            .collect();
        let defect = if resolved == Mode::Oracle {
            Defect::zero()
        } else {
            self.defect(n)
        };
        Ok(SampleBatch {
            k: self.k,
            n,
            mode: resolved,
            seed,
            samples: samples?,
            defect,
        })
    }
}

/// Identity cycle type of `1^k`.
pub fn identity_type(k: usize) -> CycleType {
    partitions_of(k).pop().expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ktrees::{front_rooted_code, hedron_rooted_code};
    use crate::oracle::{enumerate_level, rank_in, rooted_classes, RootKind};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn chi_square_p(counts: &[usize]) -> f64 {
        let total: usize = counts.iter().sum();
        let e = total as f64 / counts.len() as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
    }

    fn sampler(k: usize, n: usize) -> Sampler {
        Sampler::new(k, n).unwrap()
    }

    #[test]
    fn helpers() {
        let p: Cmap = vec![1, 2, 0, 3];
        assert_eq!(compose(&p, &inverse(&p)), vec![0, 1, 2, 3]);
        assert_eq!(power(&p, 3), vec![0, 1, 2, 3]);
        let mut rng = RngStream::new(1, 0);
        let w = [0.0, 1.0, 0.0, 3.0];
        let mut hits = [0usize; 4];
        for _ in 0..4000 {
            hits[choose_two_ended(4, 4.0, |i| w[i], &mut rng)] += 1;
        }
        assert_eq!(hits[0] + hits[2], 0);
        assert!(hits[3] > 2 * hits[1]);
    }

    #[test]
    fn streams_are_reproducible() {
        let s = sampler(2, 40);
        let a = s.sample_batch(40, 5, 7, Mode::Pointed).unwrap();
        let b = s.sample_batch(40, 5, 7, Mode::Pointed).unwrap();
        let c = s.sample_batch(40, 5, 8, Mode::Pointed).unwrap();
        let ta: Vec<String> = a.trees().map(|t| t.to_string()).collect();
        let tb: Vec<String> = b.trees().map(|t| t.to_string()).collect();
        let tc: Vec<String> = c.trees().map(|t| t.to_string()).collect();
        assert_eq!(ta, tb);
        assert_ne!(ta, tc);
    }

    #[test]
    fn sizes_are_exact() {
        for k in 1..=4 {
            let s = sampler(k, 30);
            let mut rng = RngStream::new(3, k as u64);
            for n in [1usize, 2, 5, 17, 30] {
                let t = s.sample_pointed(n, &mut rng).unwrap().tree;
                assert_eq!(t.n(), n);
                assert_eq!(t.vertex_count(), n + k);
                let (h, _) = s.sample_hedron_rooted(n, &mut rng).unwrap();
                assert_eq!(h.n(), n);
                for mu in partitions_of(k) {
                    if let Ok((arena, roots)) = s.sample_multiset_class(&mu, n, &mut rng) {
                        assert_eq!(arena.decode_front(k, &roots).n(), n);
                    }
                }
            }
        }
        let s = sampler(2, 5);
        assert!(matches!(s.sample_pointed(6, &mut RngStream::new(0, 0)), Err(SamplerError::TooLarge { .. })));
    }

    #[test]
    fn fixed_objects_are_fixed() {
        // a σ_μ-fixed C-object is isomorphic to its recolouring by σ_μ
        let k = 3;
        let s = sampler(k, 12);
        let mut rng = RngStream::new(11, 0);
        for mu in partitions_of(k) {
            let sigma = mu.canonical_permutation();
            for n in 1..=12 {
                let Ok((arena, roots)) = s.sample_multiset_class(&mu, n, &mut rng) else { continue };
                let t = arena.decode_front(k, &roots);
                let front: Vec<usize> = (0..k).collect();
                let moved: Vec<usize> = (0..k).map(|i| sigma.inverse().apply(i)).collect();
                assert_eq!(front_rooted_code(&t, &front), front_rooted_code(&t, &moved), "μ={mu} n={n}");
            }
        }
    }

    fn class_counts<F: FnMut(&mut RngStream) -> Vec<u8>>(codes: &[Vec<u8>], draws: usize, mut f: F) -> Vec<usize> {
        let index: HashMap<&Vec<u8>, usize> = codes.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut counts = vec![0usize; codes.len()];
        let mut rng = RngStream::new(2024, 0);
        for _ in 0..draws {
            counts[index[&f(&mut rng)]] += 1;
        }
        counts
    }

    #[test]
    fn multiset_sampler_is_uniform() {
        for (k, n) in [(1usize, 3usize), (2, 4)] {
            let level = enumerate_level(k, n).unwrap();
            let classes = rooted_classes(&level, RootKind::FrontDistinguishable);
            let codes: Vec<Vec<u8>> = classes.iter().map(|c| front_rooted_code(&c.tree, &c.root)).collect();
            let s = sampler(k, n);
            let id = identity_type(k);
            let front: Vec<usize> = (0..k).collect();
            let counts = class_counts(&codes, 40 * codes.len(), |rng| {
                let (arena, roots) = s.sample_multiset_class(&id, n, rng).unwrap();
                front_rooted_code(&arena.decode_front(k, &roots), &front)
            });
            assert!(chi_square_p(&counts) > 1e-3, "k={k} {counts:?}");
        }
    }

    #[test]
    fn product_sampler_is_uniform() {
        let (k, n) = (2, 4);
        let level = enumerate_level(k, n).unwrap();
        let classes = rooted_classes(&level, RootKind::FrontDistinguishableUniqueHedron);
        let codes: Vec<Vec<u8>> = classes.iter().map(|c| front_rooted_code(&c.tree, &c.root)).collect();
        let s = sampler(k, n);
        let id = identity_type(k);
        let counts = class_counts(&codes, 50 * codes.len(), |rng| {
            let (arena, root) = s.sample_product_class(&id, n, rng).unwrap();
            front_rooted_code(&arena.decode_front(k, &[root]), &[0, 1])
        });
        assert!(chi_square_p(&counts) > 1e-3, "{counts:?}");
    }

    #[test]
    fn hedron_rooted_sampler_is_uniform() {
        let (k, n) = (2, 5);
        let level = enumerate_level(k, n).unwrap();
        let classes = rooted_classes(&level, RootKind::Hedron);
        let codes: Vec<Vec<u8>> = classes.iter().map(|c| hedron_rooted_code(&c.tree, c.root[0])).collect();
        let s = sampler(k, n);
        let counts = class_counts(&codes, 40 * codes.len(), |rng| {
            let (t, _) = s.sample_hedron_rooted(n, rng).unwrap();
            let root = t.hedra().iter().position(|h| *h == vec![0, 1, 2]).unwrap();
            hedron_rooted_code(&t, root)
        });
        assert!(chi_square_p(&counts) > 1e-3, "{counts:?}");
    }

    #[test]
    fn lambda_marginal_concentrates() {
        let s = sampler(2, 20);
        let m = s.lambda_marginal(20);
        let id = m.iter().find(|(l, _)| l.is_identity()).unwrap().1;
        assert!(id > 0.99);
        let t = SeriesTable::build(2, 20).unwrap();
        assert!((id - crate::gfsystem::identity_type_mass(&t, 20)).abs() < 1e-12);
    }

    #[test]
    fn pointed_mode_tracks_uniform() {
        let (k, n) = (2, 5);
        let s = sampler(k, n);
        let level = enumerate_level(k, n).unwrap();
        let draws = 40_000;
        let mut counts = vec![0usize; level.len()];
        let mut rng = RngStream::new(99, 0);
        for _ in 0..draws {
            let t = s.sample_pointed(n, &mut rng).unwrap().tree;
            counts[rank_in(&level, &t).unwrap()] += 1;
        }
        let u = 1.0 / level.len() as f64;
        let tv: f64 = counts.iter().map(|&c| (c as f64 / draws as f64 - u).abs()).sum::<f64>() / 2.0;
        let defect = s.defect(n).value;
        let noise = (level.len() as f64 / draws as f64).sqrt();
        assert!(tv <= defect + noise, "tv={tv} defect={defect}");
    }

    #[test]
    fn part_weights_match_exact_series() {
        let (k, n) = (2, 30);
        let s = sampler(k, n);
        let t = SeriesTable::build(k, n).unwrap();
        let p = pointed_pieces(&t);
        let rho = rho_f64(k).unwrap();
        let (wb, wdec) = s.part_weights(n);
        let scale = rho.powi(n as i32);
        let b = t.b_coefficients()[n].to_f64().unwrap() * scale;
        let v = crate::powerseries::rational_to_f64(&p.decoupled(n)) * scale;
        assert!((wb / b - 1.0).abs() < 1e-10);
        assert!((wdec / v - 1.0).abs() < 1e-10);
        assert!((s.defect_estimate(n) - s.defect(n).value).abs() < 1e-9);
    }

    #[test]
    fn oracle_mode() {
        let s = sampler(2, 8);
        let b = s.sample_batch(4, 50, 1, Mode::Auto).unwrap();
        assert_eq!(b.mode, Mode::Oracle);
        assert_eq!(b.defect, Defect::zero());
        assert!(s.sample_oracle(9, &mut RngStream::new(0, 0)).is_err());
        let p = s.sample_batch(8, 3, 1, Mode::Pointed).unwrap();
        assert_eq!(p.defect, s.defect(8));
        assert!(p.summary()["defect"]["exact"].is_string());
    }
}
