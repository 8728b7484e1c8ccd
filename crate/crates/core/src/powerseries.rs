//! Truncated power series with exact rational coefficients.
//!
//! All ring operations are exact. The only floating arithmetic is
//! [`Series::evaluate`], which works in multiprecision decimal floats.

use std::ops::{Add, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Multiprecision decimal float used for evaluating series near the singularity.
pub type Real = FBig<HalfEven, 10>;

/// Default working precision (significant decimal digits) for [`Real`] computations.
pub const DEFAULT_DIGITS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("coefficient index {index} exceeds truncation order {trunc}")]
    OutOfRange { index: usize, trunc: usize },
    #[error("exp requires a zero constant term")]
    NonZeroConstant,
}

/// A power series `Σ_{n ≤ N} a_n zⁿ` known up to degree `N = trunc()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    coeff: Vec<BigRational>,
}

impl Series {
    pub fn zero(trunc: usize) -> Self {
        Series {
            coeff: vec![BigRational::zero(); trunc + 1],
        }
    }

    pub fn one(trunc: usize) -> Self {
        Self::monomial(trunc, 0, BigRational::one())
    }

    /// `c·z^degree`, truncated.
    pub fn monomial(trunc: usize, degree: usize, c: BigRational) -> Self {
        let mut s = Self::zero(trunc);
        if degree <= trunc {
            s.coeff[degree] = c;
        }
        s
    }

    /// Coefficients `a_0..=a_N`; `coeff.len() - 1` becomes the truncation order.
    pub fn from_coefficients(coeff: Vec<BigRational>) -> Self {
        assert!(!coeff.is_empty(), "a series keeps at least the constant term");
        Series { coeff }
    }

    pub fn from_integers<I, T>(coeffs: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        Self::from_coefficients(
            coeffs
                .into_iter()
                .map(|c| BigRational::from_integer(c.into()))
                .collect(),
        )
    }

    /// `Σ_{n=0}^{N} zⁿ`.
    pub fn geometric(trunc: usize) -> Self {
        Self::from_integers(std::iter::repeat_n(1, trunc + 1))
    }

    pub fn trunc(&self) -> usize {
        self.coeff.len() - 1
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeff
    }

    /// `[zⁿ]` of the series.
    pub fn coefficient(&self, n: usize) -> Result<&BigRational, SeriesError> {
        self.coeff.get(n).ok_or(SeriesError::OutOfRange {
            index: n,
            trunc: self.trunc(),
        })
    }

    pub fn truncate(&self, trunc: usize) -> Series {
        let mut coeff: Vec<BigRational> = self.coeff.iter().take(trunc + 1).cloned().collect();
        coeff.resize(trunc + 1, BigRational::zero());
        Series { coeff }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, c: &BigRational) -> Series {
        Series {
            coeff: self.coeff.iter().map(|a| a * c).collect(),
        }
    }

    /// Derivative; the truncation order drops by one (it stays 0 for constants).
    pub fn derivative(&self) -> Series {
        if self.trunc() == 0 {
            return Series::zero(0);
        }
        Series {
            coeff: self
                .coeff
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, a)| a * BigRational::from_integer(BigInt::from(n)))
                .collect(),
        }
    }

    /// `z·d/dz`, which keeps the truncation order: `[zⁿ] ↦ n·a_n`.
    pub fn pointing(&self) -> Series {
        Series {
            coeff: self
                .coeff
                .iter()
                .enumerate()
                .map(|(n, a)| a * BigRational::from_integer(BigInt::from(n)))
                .collect(),
        }
    }

    /// Multiplication by `z^shift`, keeping the truncation order.
    pub fn shift(&self, shift: usize) -> Series {
        let n = self.trunc();
        let mut out = Series::zero(n);
        for (i, a) in self.coeff.iter().enumerate() {
            if i + shift > n {
                break;
            }
            out.coeff[i + shift] = a.clone();
        }
        out
    }

    /// `a(zⁱ)`, truncated at the same order.
    pub fn substitute_power(&self, i: usize) -> Series {
        assert!(i >= 1, "substitution exponent must be positive");
        let n = self.trunc();
        let mut out = Series::zero(n);
        for (deg, a) in self.coeff.iter().enumerate() {
            let target = deg * i;
            if target > n {
                break;
            }
            out.coeff[target] = a.clone();
        }
        out
    }

    /// Formal exponential via `n·e_n = Σ_{m=1}^{n} m·a_m·e_{n−m}`, `e_0 = 1`.
    pub fn exp(&self) -> Result<Series, SeriesError> {
        if !self.coeff[0].is_zero() {
            return Err(SeriesError::NonZeroConstant);
        }
        let n_max = self.trunc();
        let weighted: Vec<BigRational> = self.pointing().coeff;
        let mut e = vec![BigRational::zero(); n_max + 1];
        e[0] = BigRational::one();
        for n in 1..=n_max {
            let mut acc = BigRational::zero();
            for m in 1..=n {
                if !weighted[m].is_zero() && !e[n - m].is_zero() {
                    acc += &weighted[m] * &e[n - m];
                }
            }
            e[n] = acc / BigRational::from_integer(BigInt::from(n));
        }
        Ok(Series { coeff: e })
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeff.iter().all(|c| c.is_integer())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeff.iter().all(|c| !c.is_negative())
    }

    /// Horner evaluation of the truncated polynomial at `x` with `digits` significant digits.
    pub fn evaluate(&self, x: &Real, digits: usize) -> Real {
        let x = x.clone().with_precision(digits).value();
        let mut acc = Real::ZERO.with_precision(digits).value();
        for c in self.coeff.iter().rev() {
            acc = acc * &x + rational_to_real(c, digits);
        }
        acc
    }

    pub fn evaluate_f64(&self, x: f64) -> f64 {
        real_to_f64(&self.evaluate(&real_from_f64(x, DEFAULT_DIGITS), DEFAULT_DIGITS))
    }

    /// `["num/den", …]`, one entry per coefficient.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.coeff
                .iter()
                .map(|c| serde_json::Value::String(format!("{}/{}", c.numer(), c.denom())))
                .collect(),
        )
    }
}

fn zip_truncated(a: &Series, b: &Series) -> usize {
    a.trunc().min(b.trunc())
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        let n = zip_truncated(self, rhs);
        Series {
            coeff: (0..=n).map(|i| &self.coeff[i] + &rhs.coeff[i]).collect(),
        }
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        let n = zip_truncated(self, rhs);
        Series {
            coeff: (0..=n).map(|i| &self.coeff[i] - &rhs.coeff[i]).collect(),
        }
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        Series {
            coeff: self.coeff.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        let n = zip_truncated(self, rhs);
        let mut out = vec![BigRational::zero(); n + 1];
        for (i, a) in self.coeff.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeff.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Series { coeff: out }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Series {
            type Output = Series;
            fn $m(self, rhs: Series) -> Series {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

pub fn add(a: &Series, b: &Series) -> Series {
    a + b
}

pub fn mul(a: &Series, b: &Series) -> Series {
    a * b
}

pub fn derivative(a: &Series) -> Series {
    a.derivative()
}

pub fn coefficient(a: &Series, n: usize) -> Result<&BigRational, SeriesError> {
    a.coefficient(n)
}

pub fn substitute_power(a: &Series, i: usize) -> Series {
    a.substitute_power(i)
}

pub fn exp(a: &Series) -> Result<Series, SeriesError> {
    a.exp()
}

pub fn evaluate(a: &Series, x: &Real, digits: usize) -> Real {
    a.evaluate(x, digits)
}

fn biguint_to_ubig(x: &BigUint) -> UBig {
    UBig::from_le_bytes(&x.to_bytes_le())
}

pub fn bigint_to_ibig(x: &BigInt) -> IBig {
    let mag = IBig::from(biguint_to_ubig(x.magnitude()));
    if x.sign() == Sign::Minus {
        -mag
    } else {
        mag
    }
}

pub fn bigint_to_real(x: &BigInt, digits: usize) -> Real {
    Real::from(bigint_to_ibig(x)).with_precision(digits).value()
}

pub fn rational_to_real(q: &BigRational, digits: usize) -> Real {
    let num = bigint_to_real(q.numer(), digits);
    if q.denom().is_one() {
        return num;
    }
    num / bigint_to_real(q.denom(), digits)
}

pub fn real_from_f64(x: f64, digits: usize) -> Real {
    FBig::<HalfEven, 2>::try_from(x)
        .expect("finite f64")
        .with_base_and_precision::<10>(digits)
        .value()
}

pub fn real_from_int(x: i64, digits: usize) -> Real {
    Real::from(x).with_precision(digits).value()
}

pub fn real_to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

/// Natural logarithm of a positive big integer as `f64`, without overflowing.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("fits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `q` as `f64`, exact up to rounding even when numerator and denominator overflow.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let ln = ln_biguint(q.numer().magnitude()) - ln_biguint(q.denom().magnitude());
    let v = ln.exp();
    if q.is_negative() {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Series {
        Series::from_integers(v.iter().copied())
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ring_operations() {
        assert_eq!(&ints(&[1, 1, 0]) * &ints(&[1, 1, 0]), ints(&[1, 2, 1]));
        assert_eq!(ints(&[0, 0, 0, 1]).derivative(), ints(&[0, 0, 3]));
        assert_eq!(&ints(&[1, 2]) + &ints(&[3, 4, 5]), ints(&[4, 6]));
        assert_eq!(&ints(&[1, 2]) - &ints(&[3, 4]), ints(&[-2, -2]));
        let mut geo = Series::one(5);
        for _ in 0..5 {
            geo = &(&geo * &Series::monomial(5, 1, q(1, 1))) + &Series::one(5);
        }
        assert_eq!(geo.coefficient(5).unwrap(), &q(1, 1));
        assert!(matches!(
            geo.coefficient(6),
            Err(SeriesError::OutOfRange { index: 6, trunc: 5 })
        ));
    }

    #[test]
    fn substitutions() {
        assert_eq!(ints(&[1, 1, 0, 0]).substitute_power(2), ints(&[1, 0, 1, 0]));
        assert_eq!(
            ints(&[0, 1, 1, 0, 0, 0, 0]).substitute_power(3),
            ints(&[0, 0, 0, 1, 0, 0, 1])
        );
        let a = ints(&[3, 1, 4, 1, 5]);
        assert_eq!(a.substitute_power(1), a);
    }

    #[test]
    fn exp_basics() {
        assert_eq!(Series::zero(6).exp().unwrap(), Series::one(6));
        assert_eq!(Series::one(3).exp(), Err(SeriesError::NonZeroConstant));
        let e = Series::monomial(8, 1, q(1, 1)).exp().unwrap();
        let mut fact = BigInt::one();
        for n in 0..=8i64 {
            if n > 0 {
                fact *= n;
            }
            assert_eq!(e.coeff[n as usize], BigRational::new(BigInt::one(), fact.clone()));
        }
    }

    /// exp by the defining sum `Σ_j A^j / j!` with naive convolution; independent of the recurrence.
    fn exp_by_powers(a: &Series) -> Series {
        let n = a.trunc();
        let mut out = Series::one(n);
        let mut term = Series::one(n);
        for j in 1..=n {
            let mut next = Series::zero(n);
            for (x, ax) in term.coeff.iter().enumerate() {
                for (y, ay) in a.coeff.iter().enumerate() {
                    if x + y <= n {
                        next.coeff[x + y] += ax * ay;
                    }
                }
            }
            term = next.scale(&q(1, j as i64));
            out = &out + &term;
        }
        out
    }

    #[test]
    fn multiset_identity_to_order_60() {
        let n = 60;
        let log_geo = Series::from_coefficients(
            (0..=n)
                .map(|i| if i == 0 { BigRational::zero() } else { q(1, i as i64) })
                .collect(),
        );
        let e = log_geo.exp().unwrap();
        assert_eq!(e, Series::geometric(n));
        let small = log_geo.truncate(20);
        assert_eq!(exp_by_powers(&small), Series::geometric(20));
    }

    #[test]
    fn evaluation() {
        let x = real_from_f64(0.5, 60);
        assert_eq!(real_to_f64(&ints(&[1, 1]).evaluate(&x, 60)), 1.5);
        assert_eq!(real_to_f64(&Series::zero(4).evaluate(&x, 60)), 0.0);
        // Σ_{n≤60} 2^{-n} = 2 − 2^{-60}
        let v = Series::geometric(60).evaluate(&x, 60);
        let expected = real_from_int(2, 60) - real_from_int(1, 60) / Real::from(UBig::ONE << 60usize);
        let diff = v - expected;
        let eps = Real::from_parts(IBig::ONE, -50);
        assert!(diff < eps && -diff < eps);
    }

    #[test]
    fn json_dump() {
        let s = Series::from_coefficients(vec![q(1, 2), q(-3, 1)]);
        assert_eq!(s.to_json().to_string(), r#"["1/2","-3/1"]"#);
    }

    #[test]
    fn big_logs() {
        let x = BigUint::from(3u32).pow(2000);
        assert!((ln_biguint(&x) - 2000.0 * 3f64.ln()).abs() < 1e-9);
        let r = BigRational::new(BigInt::from(x.clone()), BigInt::from(x * 4u32));
        assert!((rational_to_f64(&r) - 0.25).abs() < 1e-15);
    }

    fn arb_series(n: usize) -> impl Strategy<Value = Series> {
        proptest::collection::vec(-3i64..=3, n + 1).prop_map(|mut v| {
            v[0] = 0;
            Series::from_integers(v)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exp_is_a_homomorphism(a in arb_series(30), b in arb_series(30)) {
            let lhs = (&a + &b).exp().unwrap();
            let rhs = &a.exp().unwrap() * &b.exp().unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn substitution_commutes_with_mul(a in arb_series(20), b in arb_series(20), i in 1usize..=4) {
            prop_assert_eq!((&a * &b).substitute_power(i), &a.substitute_power(i) * &b.substitute_power(i));
        }
    }
}
