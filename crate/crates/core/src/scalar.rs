//! Numeric backend abstraction: `f64` for quadrature and series work,
//! [`BigRational`] for the exact oracle paths.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Field operations shared by the float and exact backends.
pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Signed + Send + Sync + 'static
{
    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Whether arithmetic in this backend is exact.
    fn is_exact() -> bool;

    /// Square root when it exists in the backend (always for nonnegative floats,
    /// only for perfect squares on rationals).
    fn sqrt_opt(&self) -> Option<Self>;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Integer power, negative exponents allowed for nonzero bases.
    fn powi(&self, e: i64) -> Self {
        let mut base = if e < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base.clone();
            }
            n >>= 1;
            if n > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_exact() -> bool {
        false
    }
    fn powi(&self, e: i64) -> Self {
        f64::powi(*self, e as i32)
    }
    fn sqrt_opt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_exact() -> bool {
        true
    }
    fn sqrt_opt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        (&n * &n == *self.numer() && &d * &d == *self.denom()).then(|| BigRational::new(n, d))
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: i64) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

/// Parses "p/q" or an integer literal as an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::IrrationalParameter(format!("not a rational literal: {s}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::InvalidParameter("zero denominator".into()));
            }
            Ok(BigRational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(p))
        }
    }
}

/// Formats a rational as "p/q", or "p" when the denominator is one.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_repeated_product() {
        let x = rat(3, 2);
        assert_eq!(x.powi(3), rat(27, 8));
        assert_eq!(x.powi(-2), rat(4, 9));
        assert_eq!(x.powi(0), rat_int(1));
        assert_eq!(Scalar::powi(&2.0f64, -1), 0.5);
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(rat(9, 4).sqrt_opt(), Some(rat(3, 2)));
        assert_eq!(rat(1, 2).sqrt_opt(), None);
        assert_eq!(rat(-1, 4).sqrt_opt(), None);
        assert_eq!(2.25f64.sqrt_opt(), Some(1.5));
    }

    #[test]
    fn rational_literals_round_trip() {
        assert_eq!(parse_rational("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), rat_int(7));
        assert!(matches!(parse_rational("0.5"), Err(Error::IrrationalParameter(_))));
        assert_eq!(fmt_rational(&rat(-1, 2)), "-1/2");
        assert_eq!(fmt_rational(&rat(4, 2)), "2");
    }
}
