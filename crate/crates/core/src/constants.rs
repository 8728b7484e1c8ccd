//! Radius of convergence, scaling constant and asymptotic count constant
//! for unlabelled k-trees, computed in high-precision decimal arithmetic.

use std::str::FromStr;

use dashu_float::ops::SquareRoot;
use num_bigint::{BigInt, BigUint};
use serde::Serialize;
use thiserror::Error;

use crate::gfsystem::{build_families, GfError, Scaled, SeriesTable};
use crate::powerseries::{bigint_to_real, real_from_f64, real_from_int, real_to_f64, Real, DEFAULT_DIGITS};

pub const DEFAULT_TRUNCATION: usize = 30;
pub const DEFAULT_TOLERANCE: f64 = 1e-40;

const PI: &str = "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899863";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("truncation m = {0} is below 10")]
    Truncation(usize),
    #[error("tolerance must be positive")]
    Tolerance,
    #[error("no sign change on [1/(2ek), 1/(ek)] for k = {k}, m = {m}")]
    NoBracket { k: usize, m: usize },
    #[error(transparent)]
    Series(#[from] GfError),
}

#[derive(Clone, Debug)]
pub struct Constants {
    pub k: usize,
    pub rho: Real,
    pub sqrt_factor: Real,
    pub c: Real,
    pub asym_const: Real,
    pub trunc_m: usize,
}

/// `f64` view of [`Constants`] for tables and JSON.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConstantsRow {
    pub k: usize,
    pub c: f64,
    pub rho: f64,
    pub sqrt_factor: f64,
    pub asym_const: f64,
    pub m: usize,
}

fn real(x: i64) -> Real {
    real_from_int(x, DEFAULT_DIGITS)
}

fn one() -> Real {
    real(1)
}

fn pi() -> Real {
    Real::from_str(PI).expect("valid literal").with_precision(DEFAULT_DIGITS).value()
}

fn harmonic(k: usize) -> Real {
    (1..=k as i64).fold(real(0), |acc, i| acc + one() / real(i))
}

fn factorial(k: usize) -> Real {
    (1..=k as i64).fold(one(), |acc, i| acc * real(i))
}

/// Horner evaluation of integer coefficients.
fn horner(coeffs: &[Real], x: &Real) -> Real {
    let mut acc = real(0);
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn to_reals(v: &[BigUint]) -> Vec<Real> {
    v.iter()
        .map(|x| bigint_to_real(&BigInt::from(x.clone()), DEFAULT_DIGITS))
        .collect()
}

/// Root of `x·exp(k Σ_{i=2}^m B̄^{[m]}(xⁱ)/i) = 1/(ek)` by bisection.
pub fn solve_rho(k: usize, m: usize, tol: f64) -> Result<Real, ConstantsError> {
    if m < 10 {
        return Err(ConstantsError::Truncation(m));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(ConstantsError::Tolerance);
    }
    let table = SeriesTable::build(k, m)?;
    let coeffs = to_reals(table.bbar_identity());
    let kr = real(k as i64);
    let target = one() / (one().exp() * &kr);
    let f = |x: &Real| -> Real {
        let mut s = real(0);
        let mut xi = x.clone();
        for i in 2..=m {
            xi *= x;
            s += horner(&coeffs, &xi) / real(i as i64);
        }
        x.clone() * (kr.clone() * s).exp() - &target
    };
    let mut lo = target.clone() / real(2);
    let mut hi = target.clone();
    let flo = f(&lo);
    let fhi = f(&hi);
    if (flo > real(0)) == (fhi > real(0)) {
        return Err(ConstantsError::NoBracket { k, m });
    }
    let tol = real_from_f64(tol, DEFAULT_DIGITS);
    let rising = flo < real(0);
    for _ in 0..400 {
        if hi.clone() - &lo <= tol {
            break;
        }
        let mid = (lo.clone() + &hi) / real(2);
        if (f(&mid) < real(0)) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / real(2))
}

/// `Σ_{i≥2} (z·F')(ρⁱ)` from coefficients `n·F[n]`, stopping once a term is below `1e-20`.
fn pointed_power_sum(bbar: &[Real], rho: &Real) -> Real {
    let weighted: Vec<Real> = bbar
        .iter()
        .enumerate()
        .map(|(n, b)| b.clone() * real(n as i64))
        .collect();
    let eps = real_from_f64(1e-20, DEFAULT_DIGITS);
    let mut sum = real(0);
    let mut x = rho.clone();
    for _ in 2..10_000 {
        x *= rho;
        let term = horner(&weighted, &x);
        sum += &term;
        if term < eps {
            break;
        }
    }
    sum
}

/// `(sqrt_factor, c)` with `sqrt_factor = √(1 + k Σ_{i≥2} B̄'(ρⁱ)ρⁱ)` and `c = k·H_k·sqrt_factor`.
pub fn compute_c(k: usize, rho: &Real, table: &SeriesTable) -> (Real, Real) {
    let bbar = to_reals(table.bbar_identity());
    let inner = one() + real(k as i64) * pointed_power_sum(&bbar, rho);
    let sf = inner.sqrt();
    let c = real(k as i64) * harmonic(k) * &sf;
    (sf, c)
}

/// Multiplier of `n^{−5/2}ρ^{−n}` in the asymptotic count of `U[n]`.
pub fn asymptotic_constant(k: usize, rho: &Real, table: &SeriesTable) -> Real {
    let bbar = to_reals(table.bbar_identity());
    let kr = real(k as i64);
    let inner = one() + kr.clone() * pointed_power_sum(&bbar, rho);
    let three_halves = inner.clone() * inner.sqrt();
    // C_{1^k}(ρ) = (kρ)^{−1/k}
    let krho = kr.clone() * rho;
    let front = (krho.ln() / real(-(k as i64))).exp();
    let denom = kr.clone() * &kr * factorial(k) * (real(2) * pi()).sqrt();
    front / denom * three_halves
}

/// Truncation used for the pointed sums: enough that `ρ^{2N}`-sized tails vanish.
fn sum_truncation(k: usize, m: usize) -> usize {
    m.max(if k == 1 { 60 } else { 40 })
}

impl Constants {
    pub fn compute(k: usize, m: usize) -> Result<Self, ConstantsError> {
        let rho = solve_rho(k, m, DEFAULT_TOLERANCE)?;
        let table = SeriesTable::build(k, sum_truncation(k, m))?;
        let (sqrt_factor, c) = compute_c(k, &rho, &table);
        let asym_const = asymptotic_constant(k, &rho, &table);
        Ok(Constants {
            k,
            rho,
            sqrt_factor,
            c,
            asym_const,
            trunc_m: m,
        })
    }

    pub fn row(&self) -> ConstantsRow {
        ConstantsRow {
            k: self.k,
            c: real_to_f64(&self.c),
            rho: real_to_f64(&self.rho),
            sqrt_factor: real_to_f64(&self.sqrt_factor),
            asym_const: real_to_f64(&self.asym_const),
            m: self.trunc_m,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "m": self.trunc_m,
            "rho": self.rho.to_string(),
            "sqrt_factor": self.sqrt_factor.to_string(),
            "c": self.c.to_string(),
            "asym_const": self.asym_const.to_string(),
        })
    }
}

/// `ρ` to double precision, for weight tables.
pub fn rho_f64(k: usize) -> Result<f64, ConstantsError> {
    Ok(real_to_f64(&solve_rho(k, DEFAULT_TRUNCATION, 1e-18)?))
}

/// Large-k expansion `1/(ek) − 1/(2e³k²)`, for comparison only.
pub fn rho_large_k(k: usize) -> f64 {
    let e = std::f64::consts::E;
    let k = k as f64;
    1.0 / (e * k) - 1.0 / (2.0 * e.powi(3) * k * k)
}

/// `B̄_{1^k}(ρ)` from the first `n_max` coefficients plus a fitted tail.
///
/// The coefficients behave like `ρ^{−n} n^{−3/2}(a₀ + a₁/n + a₂/n² + …)`; the
/// three amplitudes are fitted at `n_max/2`, `3n_max/4`, `n_max` and the tail
/// is summed by Euler–Maclaurin.
pub fn singular_value(k: usize, rho: f64, n_max: usize) -> f64 {
    let fam = build_families::<f64, _>(k, n_max, &Scaled::new(rho, k * n_max + 1));
    let b = &fam.bbar[fam.identity()];
    let head: f64 = b.iter().sum();
    let pts = [n_max / 2, 3 * n_max / 4, n_max];
    let mut rows = [[0.0f64; 4]; 3];
    for (r, &n) in pts.iter().enumerate() {
        let nf = n as f64;
        rows[r] = [1.0, 1.0 / nf, 1.0 / (nf * nf), b[n] * nf.powf(1.5)];
    }
    let a = solve3(rows);
    let nf = n_max as f64;
    let tail = |s: f64| -> f64 {
        nf.powf(1.0 - s) / (s - 1.0) - nf.powf(-s) / 2.0 + s * nf.powf(-s - 1.0) / 12.0
            - s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0
    };
    head + a[0] * tail(1.5) + a[1] * tail(2.5) + a[2] * tail(3.5)
}

fn solve3(mut m: [[f64; 4]; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("nonempty");
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]]
}
