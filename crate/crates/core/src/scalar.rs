//! Scalar abstraction shared by the exact and floating-point matrix code.
//!
//! The analysis path runs on [`Rational`] where every comparison with zero is
//! exact. Simulation and the eigenvalue fallback run on `f64` (or `f32`), where
//! "zero" means below a small relative threshold.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number, always kept in lowest terms.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when the value must be treated as zero during elimination.
    fn is_negligible(&self) -> bool;

    fn magnitude(&self) -> Self;

    fn to_f64(&self) -> f64;

    fn from_rational(r: &Rational) -> Self;
}

impl Scalar for Rational {
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn magnitude(&self) -> Self {
        self.abs()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

macro_rules! float_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            fn is_negligible(&self) -> bool {
                self.abs() <= $eps
            }

            fn magnitude(&self) -> Self {
                self.abs()
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn from_rational(r: &Rational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $t
            }
        }
    };
}

float_scalar!(f64, 1e-12);
float_scalar!(f32, 1e-6);

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.005"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse `{s}` as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.trim_start().starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(num, den);
        return Ok(if negative { -r } else { r });
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Formats a float with 12 significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{:.11e}", x);
    // normalise `1.23400000000e-3` to a plain, trimmed representation
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let plain = format!("{:.*}", decimals, x);
        trim_zeros(&plain)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" { "0".to_string() } else { t.to_string() }
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), int(-4));
        assert_eq!(parse_rational("0.005").unwrap(), ratio(1, 200));
        assert_eq!(parse_rational("-1.5").unwrap(), ratio(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn formats_reduced() {
        assert_eq!(format_rational(&ratio(6, -4)), "-3/2");
        assert_eq!(format_rational(&int(7)), "7");
    }

    #[test]
    fn float_format_has_twelve_digits() {
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(-2.5e-9), "-2.5e-9");
        assert_eq!(format_float(123456.0), "123456");
    }
}
