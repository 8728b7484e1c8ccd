//! Desk-scale statistics of sampled k-trees: rescaled distances and
//! diameters, neighbourhood censuses, and the goodness-of-fit helpers used
//! to test samplers.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::ktrees::{neighbourhood_in, KTree};
use crate::sampler::RngStream;

/// Mean of Rayleigh(1), `√(π/2)`.
pub const RAYLEIGH_MEAN: f64 = 1.253_314_137_315_500_3;
/// First moment of the Brownian-tree diameter, `(4/3)√(π/2)`.
pub const DIAMETER_MEAN: f64 = 1.671_085_516_420_667;
/// Second moment of the Brownian-tree diameter, `(2/3)(1 + π²/3)`.
pub const DIAMETER_SECOND_MOMENT: f64 = 2.859_912_089_130_969;

/// One CSV row.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Measurement {
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub statistic: String,
    pub value: f64,
}

pub fn write_csv<W: Write>(mut w: W, rows: &[Measurement]) -> io::Result<()> {
    writeln!(w, "k,n,seed,statistic,value")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.k, r.n, r.seed, r.statistic, r.value)?;
    }
    Ok(())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Graph distances between `pairs_per_tree` uniform vertex pairs of each tree.
pub fn raw_distances(trees: &[KTree], pairs_per_tree: usize, seed: u64) -> Vec<u32> {
    trees
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, t)| {
            let mut rng = RngStream::new(seed, i as u64);
            let g = t.graph();
            let nv = g.vertex_count();
            let mut dist = Vec::new();
            let mut queue = Vec::new();
            (0..pairs_per_tree)
                .map(|_| {
                    let u = rng.gen_range(0..nv);
                    let v = rng.gen_range(0..nv);
                    g.bfs_into(u, &mut dist, &mut queue);
                    dist[v]
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `2·c·d(v¹, v²)/√n` for uniform vertex pairs.
pub fn distance_statistic(trees: &[KTree], c: f64, pairs_per_tree: usize, seed: u64) -> Vec<f64> {
    raw_distances(trees, pairs_per_tree, seed)
        .into_iter()
        .zip(trees.iter().flat_map(|t| std::iter::repeat_n(t.n(), pairs_per_tree)))
        .map(|(d, n)| 2.0 * c * d as f64 / (n as f64).sqrt())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub x: f64,
    pub probability: f64,
    /// `log Pr(D ≥ x)·n/x²`, roughly constant under a Gaussian tail.
    pub log_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiameterStats {
    pub raw: Vec<usize>,
    pub normalized: Vec<f64>,
    pub mean: f64,
    pub second_moment: f64,
    pub tail: Vec<TailRow>,
}

/// `c·D/√n` per tree, its first two moments and the empirical tail.
pub fn diameter_statistic(trees: &[KTree], c: f64) -> DiameterStats {
    let raw: Vec<usize> = trees.par_iter().map(|t| t.graph().diameter()).collect();
    let normalized: Vec<f64> = raw
        .iter()
        .zip(trees)
        .map(|(&d, t)| c * d as f64 / (t.n() as f64).sqrt())
        .collect();
    let m = mean(&normalized);
    let m2 = normalized.iter().map(|x| x * x).sum::<f64>() / normalized.len() as f64;
    let mut tail = Vec::new();
    if let Some(&max) = raw.iter().max() {
        let n = trees[0].n() as f64;
        for x in 1..=max {
            let p = raw.iter().filter(|&&d| d >= x).count() as f64 / raw.len() as f64;
            let xf = x as f64;
            tail.push(TailRow {
                x: xf,
                probability: p,
                log_ratio: p.ln() * n / (xf * xf),
            });
        }
    }
    DiameterStats {
        raw,
        normalized,
        mean: m,
        second_moment: m2,
        tail,
    }
}

/// Empirical distribution over ball codes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CodeCensus {
    pub counts: HashMap<Vec<u8>, u64>,
    pub total: u64,
}

impl CodeCensus {
    pub fn from_codes<I: IntoIterator<Item = Vec<u8>>>(codes: I) -> Self {
        let mut c = CodeCensus::default();
        for code in codes {
            *c.counts.entry(code).or_insert(0) += 1;
            c.total += 1;
        }
        c
    }

    pub fn probability(&self, code: &[u8]) -> f64 {
        self.counts.get(code).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn support(&self) -> usize {
        self.counts.len()
    }

    /// `{hex code: probability}`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, f64> = self
            .counts
            .iter()
            .map(|(code, &c)| (hex(code), c as f64 / self.total as f64))
            .collect();
        serde_json::to_value(map).expect("finite floats")
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Codes of the radius-`r` balls around one uniform vertex of each tree.
pub fn neighbourhood_census(trees: &[KTree], r: usize, seed: u64) -> CodeCensus {
    let codes: Vec<Vec<u8>> = trees
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let mut rng = RngStream::new(seed, i as u64);
            let g = t.graph();
            let v = rng.gen_range(0..g.vertex_count());
            neighbourhood_in(t, &g, v, r)
        })
        .collect();
    CodeCensus::from_codes(codes)
}

/// Total-variation distance between two censuses.
pub fn census_tv(a: &CodeCensus, b: &CodeCensus) -> f64 {
    let mut sum = 0.0;
    for code in a.counts.keys() {
        sum += (a.probability(code) - b.probability(code)).abs();
    }
    for code in b.counts.keys() {
        if !a.counts.contains_key(code) {
            sum += b.probability(code);
        }
    }
    sum / 2.0
}

/// Total-variation distance between observed counts and probabilities `p`.
pub fn tv_from_counts(counts: &[u64], p: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(p)
        .map(|(&c, &q)| (c as f64 / total as f64 - q).abs())
        .sum::<f64>()
        / 2.0
}

/// Mean and standard deviation of the TV distance between a multinomial
/// sample of `draws` and its own law `p`, by simulation.
pub fn tv_noise(p: &[f64], draws: usize, reps: usize, seed: u64) -> (f64, f64) {
    let dist = WeightedIndex::new(p).expect("valid weights");
    let tvs: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut counts = vec![0u64; p.len()];
            for _ in 0..draws {
                counts[dist.sample(&mut rng)] += 1;
            }
            tv_from_counts(&counts, p)
        })
        .collect();
    (mean(&tvs), std_dev(&tvs))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub min_expected: f64,
}

/// Pearson goodness of fit against probabilities `p`.
pub fn chi_square(counts: &[u64], p: &[f64]) -> ChiSquare {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut min_expected = f64::INFINITY;
    for (&c, &q) in counts.iter().zip(p) {
        let e = q * total as f64;
        min_expected = min_expected.min(e);
        stat += (c as f64 - e).powi(2) / e;
    }
    let df = counts.len() - 1;
    let p_value = if df == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(stat)
    };
    ChiSquare {
        statistic: stat,
        df,
        p_value,
        min_expected,
    }
}

pub fn chi_square_uniform(counts: &[u64]) -> ChiSquare {
    let p = vec![1.0 / counts.len() as f64; counts.len()];
    chi_square(counts, &p)
}
