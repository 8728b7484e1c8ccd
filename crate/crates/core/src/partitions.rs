//! Integer partitions viewed as cycle types of permutations.
//!
//! A [`CycleType`] is stored by multiplicities (`mult[i - 1]` parts of size
//! `i`), which is the cheapest view for `z_λ` and for powers `λ^d`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("cycle type {0} has no part of size 1")]
    NoFixedPoint(String),
    #[error("cannot parse partition {0:?}")]
    Parse(String),
    #[error("not a permutation: {0:?}")]
    NotAPermutation(Vec<usize>),
}

/// Cycle type of a permutation of `[m]`, i.e. a partition `λ ⊢ m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CycleType {
    /// `mult[i]` is the number of parts of size `i + 1`; no trailing zeros.
    mult: Vec<u32>,
}

impl CycleType {
    /// Builds a cycle type from its multiplicity vector (`mult[i]` parts of size `i + 1`).
    pub fn from_multiplicities(mut mult: Vec<u32>) -> Self {
        while mult.last() == Some(&0) {
            mult.pop();
        }
        CycleType { mult }
    }

    pub fn from_parts(parts: &[usize]) -> Self {
        let max = parts.iter().copied().max().unwrap_or(0);
        let mut mult = vec![0u32; max];
        for &p in parts {
            if p > 0 {
                mult[p - 1] += 1;
            }
        }
        Self::from_multiplicities(mult)
    }

    /// `1^m`, the type of the identity.
    pub fn identity(m: usize) -> Self {
        Self::from_multiplicities(if m == 0 { vec![] } else { vec![m as u32] })
    }

    pub fn empty() -> Self {
        CycleType { mult: Vec::new() }
    }

    /// Number of parts of size `i` (1-based).
    pub fn multiplicity(&self, i: usize) -> u32 {
        if i == 0 {
            return 0;
        }
        self.mult.get(i - 1).copied().unwrap_or(0)
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.mult
    }

    /// The partitioned integer `m = Σ i·mult[i]`.
    pub fn size(&self) -> usize {
        self.mult
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 1) * c as usize)
            .sum()
    }

    pub fn num_parts(&self) -> usize {
        self.mult.iter().map(|&c| c as usize).sum()
    }

    /// Parts in decreasing order.
    pub fn parts(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_parts());
        for (i, &c) in self.mult.iter().enumerate().rev() {
            out.extend(std::iter::repeat_n(i + 1, c as usize));
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.mult.len() <= 1
    }

    /// `z_λ = Π_i i^{λ_i} λ_i!`, the order of the centraliser of a permutation of type `λ`.
    pub fn z(&self) -> BigUint {
        let mut z = BigUint::one();
        for (i, &c) in self.mult.iter().enumerate() {
            let part = BigUint::from(i as u64 + 1);
            for j in 1..=c {
                z *= &part;
                z *= BigUint::from(j);
            }
        }
        z
    }

    /// Cycle type of the `d`-th power: a part `i` splits into `gcd(i, d)` parts of size `i / gcd(i, d)`.
    pub fn power(&self, d: usize) -> CycleType {
        assert!(d >= 1, "power exponent must be positive");
        let mut mult = vec![0u32; self.mult.len()];
        for (idx, &c) in self.mult.iter().enumerate() {
            let i = idx + 1;
            let g = i.gcd(&d);
            mult[i / g - 1] += c * g as u32;
        }
        Self::from_multiplicities(mult)
    }

    /// Period of `d ↦ λ^d`: the lcm of all parts.
    pub fn order(&self) -> usize {
        self.mult
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .fold(1usize, |acc, (i, _)| acc.lcm(&(i + 1)))
    }

    /// `λ − (1, 0, …, 0)`: removes one part of size 1.
    pub fn drop_fixed_point(&self) -> Result<CycleType, PartitionError> {
        if self.multiplicity(1) == 0 {
            return Err(PartitionError::NoFixedPoint(self.to_string()));
        }
        let mut mult = self.mult.clone();
        mult[0] -= 1;
        Ok(Self::from_multiplicities(mult))
    }

    /// Adds one part of size 1.
    pub fn add_fixed_point(&self) -> CycleType {
        let mut mult = self.mult.clone();
        if mult.is_empty() {
            mult.push(0);
        }
        mult[0] += 1;
        Self::from_multiplicities(mult)
    }

    /// The permutation of `{0, …, m−1}` whose cycles are consecutive blocks,
    /// largest parts first. Its cycle type is `self`.
    pub fn canonical_permutation(&self) -> Permutation {
        let m = self.size();
        let mut images = vec![0usize; m];
        let mut start = 0;
        for part in self.parts() {
            for j in 0..part {
                images[start + j] = start + (j + 1) % part;
            }
            start += part;
        }
        Permutation { images }
    }
}

impl fmt::Display for CycleType {
    /// Sorted part list, e.g. `2+1`; the empty partition prints as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self.parts();
        if parts.is_empty() {
            return write!(f, "0");
        }
        let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join("+"))
    }
}

impl FromStr for CycleType {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Ok(CycleType::empty());
        }
        let parts = s
            .split('+')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| PartitionError::Parse(s.to_string()))?;
        if parts.contains(&0) {
            return Err(PartitionError::Parse(s.to_string()));
        }
        Ok(CycleType::from_parts(&parts))
    }
}

/// All partitions of `m`, in decreasing-lexicographic order of their part lists.
pub fn partitions_of(m: usize) -> Vec<CycleType> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<CycleType>) {
        if rest == 0 {
            out.push(CycleType::from_parts(cur));
            return;
        }
        for p in (1..=max.min(rest)).rev() {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, m, &mut Vec::new(), &mut out);
    out
}

/// A permutation of `{0, …, m−1}` given by its image vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, PartitionError> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(PartitionError::NotAPermutation(images));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(m: usize) -> Self {
        Permutation {
            images: (0..m).collect(),
        }
    }

    /// All permutations of `{0, …, m−1}` in lexicographic order of image vectors.
    pub fn all(m: usize) -> Vec<Permutation> {
        let mut cur: Vec<usize> = (0..m).collect();
        let mut out = vec![Permutation { images: cur.clone() }];
        loop {
            let Some(i) = (1..m).rev().find(|&i| cur[i - 1] < cur[i]) else {
                return out;
            };
            let j = (i..m).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
            out.push(Permutation { images: cur.clone() });
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { images: inv }
    }

    pub fn pow(&self, d: usize) -> Permutation {
        let mut out = Permutation::identity(self.len());
        let mut base = self.clone();
        let mut e = d;
        while e > 0 {
            if e & 1 == 1 {
                out = out.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        out
    }

    /// Disjoint cycles (fixed points included), each starting at its least element,
    /// listed by increasing least element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.images.len()];
        let mut out = Vec::new();
        for start in 0..self.images.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut j = self.images[start];
            while j != start {
                seen[j] = true;
                cycle.push(j);
                j = self.images[j];
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_type(&self) -> CycleType {
        let lens: Vec<usize> = self.cycles().iter().map(|c| c.len()).collect();
        CycleType::from_parts(&lens)
    }

    /// Cycle type of the restriction to the points not in `excluded`;
    /// the excluded points must be fixed.
    pub fn cycle_type_excluding(&self, excluded: &[usize]) -> CycleType {
        let lens: Vec<usize> = self
            .cycles()
            .iter()
            .filter(|c| !(c.len() == 1 && excluded.contains(&c[0])))
            .map(|c| c.len())
            .collect();
        CycleType::from_parts(&lens)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.cycles() {
            let s: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "({})", s.join(" "))?;
        }
        Ok(())
    }
}
