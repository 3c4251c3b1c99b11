//! Numeric substrate shared by the exact and floating backends.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Distance to a pole below which a float denominator counts as singular.
pub const POLE_TOL: f64 = 1e-10;

/// Field operations needed by the weight constructions.
///
/// `f64` compares with tolerance; `BigRational` is exact.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Principal square root; `None` when it leaves the backend (negative, or irrational for exact values).
    fn sqrt(&self) -> Option<Self>;
    /// True for an exact zero, or a float within [`POLE_TOL`] of zero.
    fn is_negligible(&self) -> bool;

    fn from_i64(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn powi(&self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| f64::sqrt(*self))
    }
    fn is_negligible(&self) -> bool {
        self.abs() < POLE_TOL
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer();
        let d = self.denom();
        let rn = n.sqrt();
        let rd = d.sqrt();
        (&rn * &rn == *n && &rd * &rd == *d).then(|| BigRational::new(rn, rd))
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

/// Exact rational from a decimal or `p/q` literal such as `"0.05"` or `"1/3"`.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_sqrt_of_square() {
        let q = BigRational::from_ratio(1, 4);
        assert_eq!(Scalar::sqrt(&q), Some(BigRational::from_ratio(1, 2)));
        assert_eq!(Scalar::sqrt(&BigRational::from_ratio(1, 2)), None);
    }

    #[test]
    fn powi_negative() {
        let x = BigRational::from_ratio(2, 3);
        assert_eq!(x.powi(-2), BigRational::from_ratio(9, 4));
        assert!((Scalar::powi(&0.5f64, -3) - 8.0).abs() < 1e-15);
    }

    #[test]
    fn parses_literals() {
        assert_eq!(parse_rational("0.05"), Some(BigRational::from_ratio(1, 20)));
        assert_eq!(parse_rational("-1/3"), Some(BigRational::from_ratio(-1, 3)));
        assert_eq!(parse_rational("3"), Some(BigRational::from_ratio(3, 1)));
        assert_eq!(parse_rational("abc"), None);
    }
}
