//! The partition-indexed generating functions of coloured coding trees,
//! their Burnside aggregates, the dissymmetry count `U = B + C − E`, and the
//! pieces of the cycle-pointed decomposition.
//!
//! All families are advanced one degree at a time: at degree `n` the
//! black-rooted reduced series `B̄_μ[n]` only need `C` coefficients of
//! degree `< n`, after which `C_μ[n]` follows from the exponential
//! recurrence. The engine is generic over the coefficient type so the same
//! code produces exact integer tables and scaled floating-point weights.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;
use thiserror::Error;

use crate::partitions::{partitions_of, CycleType};
use crate::powerseries::Series;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("coefficient {n} of {series} is not an integer")]
    Integrality { series: String, n: usize },
    #[error("coefficient {n} of {series} is negative")]
    Negative { series: String, n: usize },
    #[error("index {n} outside 1..={trunc}")]
    OutOfRange { n: usize, trunc: usize },
    #[error("k and N must be positive")]
    BadParameters,
}

/// Coefficient ring for the recurrences.
pub trait Coefficient: Clone + Send + Sync {
    fn nil() -> Self;
    fn unit() -> Self;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn mul_small(&self, m: u64) -> Self;
    /// Division by a positive integer; exact for the integer tables.
    fn div_small(&self, m: u64) -> Self;
    fn is_nil(&self) -> bool;
}

impl Coefficient for BigUint {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn mul_small(&self, m: u64) -> Self {
        self * m
    }
    fn div_small(&self, m: u64) -> Self {
        let (q, r) = self.div_rem(&BigUint::from(m));
        debug_assert!(r.is_zero(), "inexact division");
        q
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Coefficient for f64 {
    fn nil() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn mul_small(&self, m: u64) -> Self {
        self * m as f64
    }
    fn div_small(&self, m: u64) -> Self {
        self / m as f64
    }
    fn is_nil(&self) -> bool {
        *self == 0.0
    }
}

/// How a stored coefficient enters a substituted series.
pub trait Embedding<T> {
    /// Coefficient of `z^{d·j}` in `F(z^d)`, given the stored `F[j]`.
    fn lift(&self, x: &T, j: usize, d: usize) -> T;
    /// Multiplication by the root factor `z`.
    fn times_z(&self, x: &T) -> T;
}

/// Plain coefficients.
pub struct Exact;

impl<T: Clone> Embedding<T> for Exact {
    fn lift(&self, x: &T, _j: usize, _d: usize) -> T {
        x.clone()
    }
    fn times_z(&self, x: &T) -> T {
        x.clone()
    }
}

/// Coefficients stored as `F[n]·rⁿ`, which keeps counts growing like
/// `ρ^{−n}` within floating-point range when `r ≈ ρ`.
pub struct Scaled {
    r: f64,
    powers: Vec<f64>,
}

impl Scaled {
    pub fn new(r: f64, max_exponent: usize) -> Self {
        let mut powers = Vec::with_capacity(max_exponent + 1);
        let mut x = 1.0;
        for _ in 0..=max_exponent {
            powers.push(x);
            x *= r;
        }
        Scaled { r, powers }
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

impl Embedding<f64> for Scaled {
    fn lift(&self, x: &f64, j: usize, d: usize) -> f64 {
        x * self.powers.get((d - 1) * j).copied().unwrap_or(0.0)
    }
    fn times_z(&self, x: &f64) -> f64 {
        x * self.r
    }
}

/// The families `C_μ`, `B̄_μ` (`μ ⊢ k`) and `B_λ` (`λ ⊢ k+1`) up to degree `trunc`.
#[derive(Clone, Debug)]
pub struct Families<T> {
    pub k: usize,
    pub trunc: usize,
    /// Partitions of `k`, decreasing-lexicographic; index 0 is `(k)`, the last is `1^k`.
    pub mu: Vec<CycleType>,
    /// Partitions of `k + 1`.
    pub lambda: Vec<CycleType>,
    pub c: Vec<Vec<T>>,
    pub bbar: Vec<Vec<T>>,
    pub b_lambda: Vec<Vec<T>>,
    /// For each `μ`, one `(i, index of μ^i)` per part `i`.
    pub mu_factors: Vec<Vec<(usize, usize)>>,
    /// For each `λ`, one `(i, index of λ^i minus a fixed point)` per part `i`.
    pub lambda_factors: Vec<Vec<(usize, usize)>>,
    /// `mu_power[μ][d]` is the index of `μ^d` (entry 0 unused).
    pub mu_power: Vec<Vec<usize>>,
    /// `a[μ][m] = Σ_{d|m} (m/d)·B̄_{μ^d}[m/d]`, the exp-recurrence terms.
    pub a: Vec<Vec<T>>,
    /// `mu_prefix[μ][t][m]`: coefficient `m` of the product of the first `t+1` factors of `B̄_μ/z`.
    pub mu_prefix: Vec<Vec<Vec<T>>>,
    pub lambda_prefix: Vec<Vec<Vec<T>>>,
}

impl<T> Families<T> {
    pub fn mu_index(&self, mu: &CycleType) -> Option<usize> {
        self.mu.iter().position(|m| m == mu)
    }

    pub fn lambda_index(&self, lambda: &CycleType) -> Option<usize> {
        self.lambda.iter().position(|l| l == lambda)
    }

    /// Index of `1^k`.
    pub fn identity(&self) -> usize {
        self.mu.len() - 1
    }

    pub fn lambda_identity(&self) -> usize {
        self.lambda.len() - 1
    }
}

/// Incrementally maintained prefix products `∏_{j ≤ t} F_j(z^{i_j})`.
struct Product<T> {
    factors: Vec<(usize, usize)>,
    prefix: Vec<Vec<T>>,
}

impl<T: Coefficient> Product<T> {
    fn new(factors: Vec<(usize, usize)>) -> Self {
        let prefix = vec![Vec::new(); factors.len()];
        Product { factors, prefix }
    }

    /// Appends the coefficient of degree `m`; needs `series[·][..=m]`.
    fn push<E: Embedding<T>>(&mut self, m: usize, series: &[Vec<T>], emb: &E) -> T {
        for t in 0..self.factors.len() {
            let (i, nu) = self.factors[t];
            let mut acc = T::nil();
            let mut s = 0;
            while s <= m {
                let f = &series[nu][s / i];
                if !f.is_nil() {
                    let lifted = emb.lift(f, s / i, i);
                    if t == 0 {
                        if s == m {
                            acc = lifted;
                        }
                    } else {
                        let p = &self.prefix[t - 1][m - s];
                        if !p.is_nil() {
                            acc.add_assign(&lifted.mul(p));
                        }
                    }
                }
                s += i;
            }
            if t == 0 && !m.is_multiple_of(i) {
                acc = T::nil();
            }
            self.prefix[t].push(acc);
        }
        self.prefix.last().expect("nonempty product")[m].clone()
    }
}

/// Runs the coupled recurrences up to degree `trunc`.
pub fn build_families<T: Coefficient, E: Embedding<T>>(k: usize, trunc: usize, emb: &E) -> Families<T> {
    let mu = partitions_of(k);
    let lambda = partitions_of(k + 1);
    let index: HashMap<CycleType, usize> = mu.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let mu_power: Vec<Vec<usize>> = mu
        .iter()
        .map(|m| {
            let order = m.order();
            let period: Vec<usize> = (0..order).map(|d| index[&m.power(if d == 0 { order } else { d })]).collect();
            (0..=trunc.max(k)).map(|d| period[d % order]).collect()
        })
        .collect();
    let mu_factors: Vec<Vec<(usize, usize)>> = mu
        .iter()
        .enumerate()
        .map(|(a, m)| m.parts().into_iter().map(|i| (i, mu_power[a][i])).collect())
        .collect();
    let lambda_factors: Vec<Vec<(usize, usize)>> = lambda
        .iter()
        .map(|l| {
            l.parts()
                .into_iter()
                .map(|i| {
                    let reduced = l.power(i).drop_fixed_point().expect("λ^i fixes the points of an i-cycle");
                    (i, index[&reduced])
                })
                .collect()
        })
        .collect();

    let p = mu.len();
    let mut c: Vec<Vec<T>> = vec![vec![T::unit()]; p];
    let mut bbar: Vec<Vec<T>> = vec![vec![T::nil()]; p];
    let mut a: Vec<Vec<T>> = vec![vec![T::nil()]; p];
    let mut products: Vec<Product<T>> = mu_factors.iter().cloned().map(Product::new).collect();
    for n in 1..=trunc {
        for (m, prod) in products.iter_mut().enumerate() {
            let value = emb.times_z(&prod.push(n - 1, &c, emb));
            bbar[m].push(value);
        }
        for m in 0..p {
            let mut an = T::nil();
            for d in 1..=n {
                if n % d == 0 {
                    let j = n / d;
                    let b = &bbar[mu_power[m][d]][j];
                    if !b.is_nil() {
                        an.add_assign(&emb.lift(b, j, d).mul_small(j as u64));
                    }
                }
            }
            a[m].push(an);
        }
        for m in 0..p {
            let mut acc = T::nil();
            for s in 1..=n {
                if !a[m][s].is_nil() && !c[m][n - s].is_nil() {
                    acc.add_assign(&a[m][s].mul(&c[m][n - s]));
                }
            }
            c[m].push(acc.div_small(n as u64));
        }
    }
    let (b_lambda, lambda_prefix): (Vec<Vec<T>>, Vec<Vec<Vec<T>>>) = lambda_factors
        .iter()
        .map(|f| {
            let mut prod = Product::new(f.clone());
            let mut out = vec![T::nil()];
            for n in 1..=trunc {
                out.push(emb.times_z(&prod.push(n - 1, &c, emb)));
            }
            (out, prod.prefix)
        })
        .unzip();
    let mu_prefix = products.into_iter().map(|p| p.prefix).collect();
    Families {
        a,
        mu_prefix,
        lambda_prefix,
        k,
        trunc,
        mu,
        lambda,
        c,
        bbar,
        b_lambda,
        mu_factors,
        lambda_factors,
        mu_power,
    }
}

/// Exact tables: the families, their Burnside aggregates `B`, `C`, `E` and
/// the unlabelled count `U`, all integer valued.
#[derive(Clone, Debug)]
pub struct SeriesTable {
    pub families: Families<BigUint>,
    b: Vec<BigUint>,
    c: Vec<BigUint>,
    e: Vec<BigUint>,
    u: Vec<BigUint>,
}

fn factorial(m: usize) -> BigUint {
    (1..=m as u64).fold(BigUint::one(), |acc, i| acc * i)
}

/// `Σ_x series_x / z_x`, checked to be integral.
fn burnside_sum<'a>(
    name: &str,
    m: usize,
    terms: impl Iterator<Item = (&'a CycleType, Vec<BigUint>)>,
    trunc: usize,
) -> Result<Vec<BigUint>, GfError> {
    let fact = factorial(m);
    let mut acc = vec![BigUint::zero(); trunc + 1];
    for (ct, series) in terms {
        let w = &fact / ct.z();
        for (n, x) in series.iter().enumerate() {
            acc[n] += &w * x;
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(n, x)| {
            let (q, r) = x.div_rem(&fact);
            if r.is_zero() {
                Ok(q)
            } else {
                Err(GfError::Integrality {
                    series: name.to_string(),
                    n,
                })
            }
        })
        .collect()
}

fn convolve(a: &[BigUint], b: &[BigUint], trunc: usize) -> Vec<BigUint> {
    (0..=trunc)
        .map(|n| {
            let mut acc = BigUint::zero();
            for i in 0..=n {
                if !a[i].is_zero() && !b[n - i].is_zero() {
                    acc += &a[i] * &b[n - i];
                }
            }
            acc
        })
        .collect()
}

fn to_series(v: &[BigUint]) -> Series {
    Series::from_integers(v.iter().map(|x| BigInt::from(x.clone())))
}

impl SeriesTable {
    pub fn build(k: usize, trunc: usize) -> Result<Self, GfError> {
        if k == 0 || trunc == 0 {
            return Err(GfError::BadParameters);
        }
        let families = build_families::<BigUint, _>(k, trunc, &Exact);
        let b = burnside_sum(
            "B",
            k + 1,
            families.lambda.iter().zip(families.b_lambda.iter().cloned()),
            trunc,
        )?;
        let c = burnside_sum("C", k, families.mu.iter().zip(families.c.iter().cloned()), trunc)?;
        let e = burnside_sum(
            "E",
            k,
            families
                .mu
                .iter()
                .enumerate()
                .map(|(i, m)| (m, convolve(&families.bbar[i], &families.c[i], trunc))),
            trunc,
        )?;
        let u = dissymmetry(&b, &c, &e)?;
        Ok(SeriesTable { families, b, c, e, u })
    }

    pub fn k(&self) -> usize {
        self.families.k
    }

    pub fn trunc(&self) -> usize {
        self.families.trunc
    }

    pub fn u_coefficients(&self) -> &[BigUint] {
        &self.u
    }

    pub fn b_coefficients(&self) -> &[BigUint] {
        &self.b
    }

    pub fn c_coefficients(&self) -> &[BigUint] {
        &self.c
    }

    pub fn e_coefficients(&self) -> &[BigUint] {
        &self.e
    }

    /// `B̄_{1^k}` coefficients.
    pub fn bbar_identity(&self) -> &[BigUint] {
        &self.families.bbar[self.families.identity()]
    }

    /// `C_{1^k}` coefficients.
    pub fn c_identity(&self) -> &[BigUint] {
        &self.families.c[self.families.identity()]
    }

    pub fn u(&self) -> Series {
        to_series(&self.u)
    }

    pub fn b(&self) -> Series {
        to_series(&self.b)
    }

    pub fn c(&self) -> Series {
        to_series(&self.c)
    }

    pub fn e(&self) -> Series {
        to_series(&self.e)
    }

    pub fn c_mu(&self, mu: &CycleType) -> Option<Series> {
        self.families.mu_index(mu).map(|i| to_series(&self.families.c[i]))
    }

    pub fn bbar_mu(&self, mu: &CycleType) -> Option<Series> {
        self.families.mu_index(mu).map(|i| to_series(&self.families.bbar[i]))
    }

    pub fn b_lambda(&self, lambda: &CycleType) -> Option<Series> {
        self.families
            .lambda_index(lambda)
            .map(|i| to_series(&self.families.b_lambda[i]))
    }

    /// `{"k", "N", "U", "B", "defect"}` with exact values as strings.
    pub fn to_json(&self) -> serde_json::Value {
        let strs = |v: &[BigUint]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let pieces = pointed_pieces(self);
        let defect: Vec<String> = (1..=self.trunc())
            .map(|n| match pointing_defect_with(self, &pieces, n) {
                Ok(d) => d.to_string(),
                Err(e) => e.to_string(),
            })
            .collect();
        json!({
            "k": self.k(),
            "N": self.trunc(),
            "U": strs(&self.u),
            "B": strs(&self.b),
            "C": strs(&self.c),
            "E": strs(&self.e),
            "defect": defect,
        })
    }
}

fn dissymmetry(b: &[BigUint], c: &[BigUint], e: &[BigUint]) -> Result<Vec<BigUint>, GfError> {
    let mut u = Vec::with_capacity(b.len());
    for n in 0..b.len() {
        if n == 0 {
            u.push(BigUint::zero());
            continue;
        }
        let x = BigInt::from(b[n].clone()) + BigInt::from(c[n].clone()) - BigInt::from(e[n].clone());
        if x.is_negative() {
            return Err(GfError::Negative { series: "U".into(), n });
        }
        u.push(x.to_biguint().expect("nonnegative"));
    }
    Ok(u)
}

/// `U = B + C − E` as a series, with `U[0] = 0`.
pub fn dissymmetry_u(table: &SeriesTable) -> Result<Series, GfError> {
    Ok(to_series(&dissymmetry(&table.b, &table.c, &table.e)?))
}

/// Series of the cycle-pointed pieces reachable constructively.
#[derive(Clone, Debug)]
pub struct PointedPieces {
    /// `(B̄^∘w)_{1^k} = z·B̄'_{1^k}`.
    pub pointed_branch: Vec<BigUint>,
    /// `M_{1^k}(z) = Σ_{ℓ≥2} (B̄^∘w)_{1^k}(z^ℓ)`.
    pub marked: Vec<BigUint>,
    /// `k!·V3dec_1k`, i.e. `C_{1^k}·M_{1^k}`, kept integral.
    pub decoupled_times_kfact: Vec<BigUint>,
    pub kfact: BigUint,
}

impl PointedPieces {
    /// `V3dec_1k[n] = (C_{1^k}·M_{1^k})[n] / k!`.
    pub fn decoupled(&self, n: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.decoupled_times_kfact[n].clone()),
            BigInt::from(self.kfact.clone()),
        )
    }

    pub fn pointed_branch_series(&self) -> Series {
        to_series(&self.pointed_branch)
    }

    pub fn marked_series(&self) -> Series {
        to_series(&self.marked)
    }

    pub fn decoupled_series(&self) -> Series {
        let kf = BigInt::from(self.kfact.clone());
        Series::from_coefficients(
            self.decoupled_times_kfact
                .iter()
                .map(|x| BigRational::new(BigInt::from(x.clone()), kf.clone()))
                .collect(),
        )
    }
}

pub fn pointed_pieces(table: &SeriesTable) -> PointedPieces {
    let trunc = table.trunc();
    let bbar = table.bbar_identity();
    let pointed_branch: Vec<BigUint> = bbar.iter().enumerate().map(|(n, b)| b * n as u64).collect();
    let mut marked = vec![BigUint::zero(); trunc + 1];
    for l in 2..=trunc {
        for j in 1..=trunc / l {
            marked[l * j] += &pointed_branch[j];
        }
    }
    let decoupled_times_kfact = convolve(table.c_identity(), &marked, trunc);
    PointedPieces {
        pointed_branch,
        marked,
        decoupled_times_kfact,
        kfact: factorial(table.k()),
    }
}

/// `(n·U[n] − B[n] − V3dec_1k[n]) / (n·U[n])`: the mass of cycle-pointed
/// trees that the pointed sampler does not produce.
pub fn pointing_defect(table: &SeriesTable, n: usize) -> Result<BigRational, GfError> {
    pointing_defect_with(table, &pointed_pieces(table), n)
}

/// Unnormalised defect `n·U[n] − B[n] − V3dec_1k[n]`.
pub fn unreachable_mass(table: &SeriesTable, pieces: &PointedPieces, n: usize) -> Result<BigRational, GfError> {
    if n == 0 || n > table.trunc() {
        return Err(GfError::OutOfRange { n, trunc: table.trunc() });
    }
    let nu = BigInt::from(&table.u[n] * n as u64);
    let reachable = BigRational::from_integer(BigInt::from(table.b[n].clone())) + pieces.decoupled(n);
    Ok(BigRational::from_integer(nu) - reachable)
}

pub fn pointing_defect_with(table: &SeriesTable, pieces: &PointedPieces, n: usize) -> Result<BigRational, GfError> {
    let mass = unreachable_mass(table, pieces, n)?;
    if mass.is_negative() {
        return Err(GfError::Negative {
            series: "pointing defect".into(),
            n,
        });
    }
    let nu = BigInt::from(&table.u[n] * n as u64);
    Ok(mass / BigRational::from_integer(nu))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    crate::powerseries::rational_to_f64(q)
}

/// Exact `U[n]`.
pub fn count_unlabelled(k: usize, n: usize) -> Result<BigUint, GfError> {
    let table = SeriesTable::build(k, n.max(1))?;
    Ok(table.u[n].clone())
}

/// Fraction of `B[n]` carried by the identity type `1^{k+1}`.
pub fn identity_type_mass(table: &SeriesTable, n: usize) -> f64 {
    let f = &table.families;
    let li = f.lambda_identity();
    let w = BigRational::new(
        BigInt::from(f.b_lambda[li][n].clone()),
        BigInt::from(factorial(table.k() + 1)) * BigInt::from(table.b[n].clone()),
    );
    w.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn ints(v: &[BigUint], range: std::ops::RangeInclusive<usize>) -> Vec<u64> {
        v[range].iter().map(|x| x.to_u64().unwrap()).collect()
    }

    /// Rooted unlabelled trees by vertex count: canonical strings grown directly.
    fn rooted_tree_counts(max: usize) -> Vec<u64> {
        use std::collections::BTreeSet;
        let mut by_size: Vec<BTreeSet<String>> = vec![BTreeSet::new(); max + 1];
        by_size[1].insert("()".into());
        for m in 2..=max {
            let mut set = BTreeSet::new();
            for smaller in by_size[m - 1].iter() {
                // add a leaf below every node position by rewriting each "()" opening
                let bytes = smaller.as_bytes();
                for (i, &ch) in bytes.iter().enumerate() {
                    if ch == b'(' {
                        let mut s = String::new();
                        s.push_str(&smaller[..=i]);
                        s.push_str("()");
                        s.push_str(&smaller[i + 1..]);
                        set.insert(canon(&s));
                    }
                }
            }
            by_size[m] = set;
        }
        (0..=max).map(|m| by_size[m].len() as u64).collect()
    }

    fn canon(s: &str) -> String {
        fn parse(b: &[u8], i: &mut usize) -> String {
            *i += 1;
            let mut kids = Vec::new();
            while b[*i] == b'(' {
                kids.push(parse(b, i));
            }
            *i += 1;
            kids.sort();
            format!("({})", kids.concat())
        }
        parse(s.as_bytes(), &mut 0)
    }

    #[test]
    fn k1_reduced_series_counts_rooted_trees() {
        let t = SeriesTable::build(1, 7).unwrap();
        assert_eq!(ints(t.bbar_identity(), 1..=7), vec![1, 1, 2, 4, 9, 20, 48]);
        let oracle = rooted_tree_counts(7);
        assert_eq!(ints(t.bbar_identity(), 1..=7), oracle[1..=7].to_vec());
    }

    #[test]
    fn k1_unlabelled_trees() {
        let t = SeriesTable::build(1, 10).unwrap();
        assert_eq!(ints(t.u_coefficients(), 1..=10), vec![1, 1, 2, 3, 6, 11, 23, 47, 106, 235]);
    }

    #[test]
    fn k2_small_values() {
        let t = SeriesTable::build(2, 6).unwrap();
        assert_eq!(t.c_identity()[0], BigUint::one());
        assert_eq!(t.bbar_identity()[1], BigUint::one());
        assert_eq!(t.u_coefficients()[4], BigUint::from(5u32));
        for k in 1..=6 {
            let t = SeriesTable::build(k, 3).unwrap();
            assert_eq!(t.u_coefficients()[1], BigUint::one());
            assert!(t.u_coefficients()[0].is_zero());
        }
    }

    #[test]
    fn families_shape() {
        let t = SeriesTable::build(3, 20).unwrap();
        let f = &t.families;
        for m in 0..f.mu.len() {
            assert!(f.bbar[m][0].is_zero());
            assert!(f.c[m][0].is_one());
        }
        // B_{1^{k+1}} = z·C_{1^k}^{k+1}
        let ci = t.c_mu(&CycleType::identity(3)).unwrap();
        let mut p = Series::one(20);
        for _ in 0..4 {
            p = &p * &ci;
        }
        assert_eq!(t.b_lambda(&CycleType::identity(4)).unwrap(), p.shift(1));
    }

    #[test]
    fn fixed_point_route_agrees() {
        let trunc = 25;
        for k in 1..=4 {
            let t = SeriesTable::build(k, trunc).unwrap();
            // iterate B̄ ← z·exp(k Σ_i B̄(z^i)/i) from zero
            let mut bbar = Series::zero(trunc);
            for _ in 0..=trunc {
                let mut s = Series::zero(trunc);
                for i in 1..=trunc {
                    s = &s + &bbar.substitute_power(i).scale(&BigRational::new(BigInt::from(k), BigInt::from(i)));
                }
                bbar = s.exp().unwrap().shift(1);
            }
            let mut s = Series::zero(trunc);
            for i in 1..=trunc {
                s = &s + &bbar.substitute_power(i).scale(&BigRational::new(BigInt::one(), BigInt::from(i)));
            }
            let c = s.exp().unwrap();
            assert_eq!(t.bbar_mu(&CycleType::identity(k)).unwrap(), bbar);
            assert_eq!(t.c_mu(&CycleType::identity(k)).unwrap(), c);
        }
    }

    #[test]
    fn explicit_k2_system() {
        // B̄_2 = z·C_{1²}(z²) and C_2 = exp(Σ_odd B̄_2(z^i)/i + Σ_even B̄_{1²}(z^i)/i)
        let trunc = 30;
        let t = SeriesTable::build(2, trunc).unwrap();
        let two = CycleType::from_parts(&[2]);
        let id = CycleType::identity(2);
        let c11 = t.c_mu(&id).unwrap();
        assert_eq!(t.bbar_mu(&two).unwrap(), c11.substitute_power(2).shift(1));
        let b2 = t.bbar_mu(&two).unwrap();
        let b11 = t.bbar_mu(&id).unwrap();
        let mut s = Series::zero(trunc);
        for i in 1..=trunc {
            let src = if i % 2 == 1 { &b2 } else { &b11 };
            s = &s + &src.substitute_power(i).scale(&BigRational::new(BigInt::one(), BigInt::from(i)));
        }
        assert_eq!(t.c_mu(&two).unwrap(), s.exp().unwrap());
    }

    #[test]
    fn pointed_pieces_identities() {
        let t = SeriesTable::build(2, 40).unwrap();
        let p = pointed_pieces(&t);
        for n in 0..=40 {
            assert_eq!(p.pointed_branch[n], &t.bbar_identity()[n] * n as u64);
        }
        assert!(p.marked[1].is_zero());
        let b = t.bbar_identity();
        assert_eq!(p.marked[4], b[2].clone() * 2u32 + b[1].clone());
        assert_eq!(p.pointed_branch_series(), t.bbar_mu(&CycleType::identity(2)).unwrap().pointing());
    }

    #[test]
    fn defect_is_nonnegative_and_decays() {
        let t = SeriesTable::build(2, 60).unwrap();
        let pieces = pointed_pieces(&t);
        assert!(pointing_defect_with(&t, &pieces, 1).unwrap().is_zero());
        for n in 1..=60 {
            assert!(!pointing_defect_with(&t, &pieces, n).unwrap().is_negative());
        }
        assert!(pointing_defect_with(&t, &pieces, 60).unwrap() < pointing_defect_with(&t, &pieces, 20).unwrap());
        assert!(pointing_defect(&t, 61).is_err());
    }

    #[test]
    fn burnside_integrality() {
        for k in 1..=4 {
            let t = SeriesTable::build(k, 40).unwrap();
            assert!(t.u().is_integral() && t.u().is_nonnegative());
            assert!(t.b().is_integral() && t.c().is_integral() && t.e().is_integral());
        }
    }

    #[test]
    fn float_families_track_exact_ones() {
        let k = 2;
        let trunc = 60;
        let exact = build_families::<BigUint, _>(k, trunc, &Exact);
        let r = 0.17;
        let scaled = build_families::<f64, _>(k, trunc, &Scaled::new(r, k * trunc + 1));
        for m in 0..exact.mu.len() {
            for n in 0..=trunc {
                let want = crate::powerseries::ln_biguint(&exact.c[m][n]) + n as f64 * r.ln();
                let got = scaled.c[m][n].ln();
                assert!((want - got).abs() < 1e-10, "C[{m}][{n}]");
            }
        }
    }

    #[test]
    fn json_dump() {
        let t = SeriesTable::build(2, 4).unwrap();
        let j = t.to_json();
        assert_eq!(j["U"][4], "5");
        assert_eq!(j["N"], 4);
        assert_eq!(j["defect"][0], "0");
    }

    #[test]
    fn identity_type_dominates() {
        let t = SeriesTable::build(2, 20).unwrap();
        assert!(identity_type_mass(&t, 20) > 0.99);
    }
}
