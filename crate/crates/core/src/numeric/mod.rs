//! Scalar policies and the small linear-algebra engine.
//!
//! Two numeric policies exist: exact arbitrary-precision rationals and
//! tolerance-based `f64`. Generic algorithms are written against [`Num`];
//! the dynamically typed [`Scalar`] is used at the I/O boundary and refuses
//! to mix policies.

mod lp;
mod matrix;

pub use lp::{lp_solve, LpOutcome, LpProblem, LpSense};
pub use matrix::{affine_rank, det_exact, det_exact_scalar, rank, DenseMatrix};

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};

pub type Rational = BigRational;

/// Absolute tolerance used for float-policy validation and LP feasibility.
pub const FLOAT_TOL: f64 = 1e-9;

/// Tolerance for deduplicating float-policy vertices.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Exact,
    Float,
}

/// Field operations shared by the exact and float policies.
///
/// Comparisons against zero go through [`Num::near_zero`], which is exact for
/// rationals and tolerance-based for floats.
pub trait Num:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const POLICY: Policy;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;

    /// Exact zero test for rationals, `|x| <= tol` for floats.
    fn near_zero(&self, tol: f64) -> bool;

    /// Largest integer not exceeding `self`.
    fn floor_i64(&self) -> Option<i64>;

    fn to_scalar(&self) -> Scalar;
    fn from_scalar(s: &Scalar) -> Result<Self>;

    /// Total order used for canonical sorting.
    fn total_cmp(&self, other: &Self) -> Ordering;

    fn is_negligible(&self) -> bool {
        self.near_zero(FLOAT_TOL)
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.clone() - other.clone()).near_zero(tol)
    }

    /// `self > other` beyond tolerance.
    fn definitely_gt(&self, other: &Self, tol: f64) -> bool {
        let d = self.clone() - other.clone();
        !d.near_zero(tol) && d > Self::zero()
    }

    /// `self < other` beyond tolerance.
    fn definitely_lt(&self, other: &Self, tol: f64) -> bool {
        other.definitely_gt(self, tol)
    }
}

impl Num for Rational {
    const POLICY: Policy = Policy::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn near_zero(&self, _tol: f64) -> bool {
        self.is_zero()
    }
    fn floor_i64(&self) -> Option<i64> {
        self.floor().to_integer().to_i64()
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Exact(self.clone())
    }
    fn from_scalar(s: &Scalar) -> Result<Self> {
        match s {
            Scalar::Exact(r) => Ok(r.clone()),
            Scalar::Float(_) => Err(BellError::NotExact),
        }
    }
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl Num for f64 {
    const POLICY: Policy = Policy::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn near_zero(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
    fn floor_i64(&self) -> Option<i64> {
        self.is_finite().then(|| self.floor() as i64)
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Float(*self)
    }
    fn from_scalar(s: &Scalar) -> Result<Self> {
        Ok(s.to_f64())
    }
    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }
}

/// A dynamically typed number carrying its policy.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Float(f64),
}

impl Scalar {
    pub fn policy(&self) -> Policy {
        match self {
            Scalar::Exact(_) => Policy::Exact,
            Scalar::Float(_) => Policy::Float,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => Num::to_f64(r),
            Scalar::Float(f) => *f,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Common policy of a slice, rejecting mixtures.
    pub fn common_policy<'a>(values: impl IntoIterator<Item = &'a Scalar>) -> Result<Option<Policy>> {
        let mut policy = None;
        for v in values {
            match policy {
                None => policy = Some(v.policy()),
                Some(p) if p != v.policy() => return Err(BellError::MixedPolicy),
                _ => {}
            }
        }
        Ok(policy)
    }

    fn binary(
        &self,
        other: &Scalar,
        exact: impl FnOnce(&Rational, &Rational) -> Result<Rational>,
        float: impl FnOnce(f64, f64) -> f64,
    ) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => exact(a, b).map(Scalar::Exact),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(float(*a, *b))),
            _ => Err(BellError::MixedPolicy),
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        self.binary(other, |a, b| Ok(a + b), |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar> {
        self.binary(other, |a, b| Ok(a - b), |a, b| a - b)
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar> {
        self.binary(other, |a, b| Ok(a * b), |a, b| a * b)
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        self.binary(
            other,
            |a, b| {
                if b.is_zero() {
                    Err(BellError::NumericBreakdown("division by zero".into()))
                } else {
                    Ok(a / b)
                }
            },
            |a, b| a / b,
        )
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Scalar::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Float(x) => f.write_str(&format_sig(*x, 17)),
        }
    }
}

/// Parses `"p/q"` and integers as exact rationals, anything with a decimal
/// point or exponent as a float.
impl FromStr for Scalar {
    type Err = BellError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || BellError::Parse(format!("not a number: `{s}`"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(BellError::Parse(format!("zero denominator in `{s}`")));
            }
            return Ok(Scalar::Exact(Rational::new(n, d)));
        }
        if let Ok(n) = s.parse::<BigInt>() {
            return Ok(Scalar::Exact(Rational::from_integer(n)));
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        if !x.is_finite() {
            return Err(bad());
        }
        Ok(Scalar::Float(x))
    }
}

/// Formats like C's `%.{sig}g`.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Shorthand for an exact rational `num/den`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::ratio(num, den)
}

/// Lexicographic comparison of two vectors under [`Num::total_cmp`].
pub fn lex_cmp<T: Num>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Sorts into canonical order and removes duplicates (exact, or within
/// [`DEDUP_TOL`] for floats).
pub fn canonicalize<T: Num>(points: &mut Vec<Vec<T>>) {
    points.sort_by(|a, b| lex_cmp(a, b));
    points.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| x.approx_eq(y, DEDUP_TOL)));
}

pub fn dot<T: Num>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_policies() {
        assert_eq!("1/4".parse::<Scalar>().unwrap(), Scalar::Exact(q(1, 4)));
        assert_eq!("2/8".parse::<Scalar>().unwrap(), Scalar::Exact(q(1, 4)));
        assert_eq!("3".parse::<Scalar>().unwrap(), Scalar::Exact(q(3, 1)));
        assert_eq!("0.25".parse::<Scalar>().unwrap(), Scalar::Float(0.25));
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("abc".parse::<Scalar>().is_err());
    }

    #[test]
    fn rationals_stay_reduced() {
        let r = q(6, -8);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(4));
    }

    #[test]
    fn mixed_policy_rejected() {
        let a = Scalar::Exact(q(1, 2));
        let b = Scalar::Float(0.5);
        assert!(matches!(a.checked_add(&b), Err(BellError::MixedPolicy)));
        assert!(matches!(
            Scalar::common_policy([&a, &b]),
            Err(BellError::MixedPolicy)
        ));
        assert_eq!(
            a.checked_mul(&Scalar::Exact(q(2, 3))).unwrap(),
            Scalar::Exact(q(1, 3))
        );
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.5, 12), "0.5");
        assert_eq!(format_sig(2.8284271247461903, 12), "2.82842712475");
        assert_eq!(format_sig(1.0, 17), "1");
        assert_eq!(format_sig(1.5e-7, 12), "1.5e-07");
        assert_eq!(format_sig(-0.1, 17), "-0.10000000000000001");
    }
}
