//! Scalar abstraction shared by the exact and floating-point code paths.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse scalar `{text}`")]
pub struct ScalarParseError {
    pub text: String,
}

/// Field element used by every matrix and polynomial in the crate.
///
/// `EXACT` selects the algorithm family: exact scalars get rational
/// elimination and exact zero tests, inexact ones get tolerance-based
/// linear algebra.
pub trait Scalar:
    Clone + Debug + Display + PartialEq + Num + std::ops::Neg<Output = Self> + Send + Sync + 'static
{
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_i64(n) / Self::from_i64(d)
    }

    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Exact scalars ignore `tol`.
    fn is_negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.magnitude() <= tol
        }
    }

    fn to_text(&self) -> String;
    fn parse_text(s: &str) -> Result<Self, ScalarParseError>;
}

fn parse_ratio_parts(s: &str) -> Option<(BigRational, bool)> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some((BigRational::new(n, d), true));
    }
    // decimal with optional exponent, parsed exactly
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some((r, false))
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_text(&self) -> String {
        format!("{self:?}")
    }
    fn parse_text(s: &str) -> Result<Self, ScalarParseError> {
        let t = s.trim();
        if let Ok(v) = t.parse::<f64>() {
            return Ok(v);
        }
        parse_ratio_parts(t)
            .and_then(|(r, _)| num_traits::ToPrimitive::to_f64(&r))
            .ok_or_else(|| ScalarParseError { text: s.to_string() })
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f32
    }
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn to_text(&self) -> String {
        format!("{self:?}")
    }
    fn parse_text(s: &str) -> Result<Self, ScalarParseError> {
        f64::parse_text(s).map(|v| v as f32)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }
    /// Exact value of the binary double.
    fn from_f64(v: f64) -> Self {
        <BigRational as num_traits::FromPrimitive>::from_f64(v).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn magnitude(&self) -> f64 {
        Scalar::to_f64(&self.abs())
    }
    fn to_text(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
    fn parse_text(s: &str) -> Result<Self, ScalarParseError> {
        parse_ratio_parts(s)
            .map(|(r, _)| r)
            .or_else(|| {
                // shortest float repr such as "1e-3" handled above; fall back to float text
                s.trim().parse::<f64>().ok().and_then(<BigRational as num_traits::FromPrimitive>::from_f64)
            })
            .ok_or_else(|| ScalarParseError { text: s.to_string() })
    }
}

/// Converts between scalar types through text for exact values and
/// through `f64` otherwise.
pub fn convert<S: Scalar, T: Scalar>(x: &S) -> T {
    if S::EXACT && T::EXACT {
        T::parse_text(&x.to_text()).expect("exact round trip")
    } else {
        T::from_f64(x.to_f64())
    }
}

/// Best rational approximation with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e15 {
            break;
        }
        let a_i = a as i128;
        let p2 = a_i * p1 + p0;
        let q2 = a_i * q1 + q0;
        if q2 > max_den as i128 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    let r = BigRational::new(BigInt::from(p1), BigInt::from(q1));
    Some(if neg { -r } else { r })
}
