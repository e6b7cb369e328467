//! Numeric types used for scores.
//!
//! Every score in the crate is a ratio of triple counts, so the scoring code
//! only needs a field that can be built from counts. [`Scalar`] gathers those
//! operations; it is implemented for `f32`, `f64` and the exact rationals
//! [`Rational64`] and [`BigRational`]. The crate default is [`Exact`]
//! (`BigRational`), which never overflows on corpus-sized macro averages.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Default exact score type.
pub type Exact = BigRational;

/// Scalar field used to hold precision, recall and f-score values.
pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// Renders with exactly `places` digits after the decimal point.
    fn to_fixed(&self, places: usize) -> String;

    /// Renders at the type's full precision.
    ///
    /// Floats use the shortest round-tripping form. Rationals print their exact
    /// expansion when it terminates and are otherwise rounded to 16 places.
    fn to_decimal(&self) -> String;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn to_fixed(&self, places: usize) -> String {
                format!("{:.*}", places, self)
            }

            fn to_decimal(&self) -> String {
                format!("{}", self)
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for BigRational {
    fn to_fixed(&self, places: usize) -> String {
        fixed_from_ratio(self, places)
    }

    fn to_decimal(&self) -> String {
        decimal_from_ratio(self)
    }
}

impl Scalar for Rational64 {
    fn to_fixed(&self, places: usize) -> String {
        fixed_from_ratio(&widen(self), places)
    }

    fn to_decimal(&self) -> String {
        decimal_from_ratio(&widen(self))
    }
}

fn widen(r: &Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Round half away from zero at `places` decimals, exact integer arithmetic.
fn fixed_from_ratio(r: &BigRational, places: usize) -> String {
    let negative = r.is_negative();
    let abs = r.abs();
    let scale = num_traits::pow(BigInt::from(10u32), places);
    let scaled = abs.numer() * &scale;
    let den = abs.denom();
    let mut quotient = &scaled / den;
    let remainder = &scaled % den;
    if remainder * 2u32 >= *den {
        quotient += 1u32;
    }
    let digits = quotient.to_string();
    let body = if places == 0 {
        digits
    } else {
        let padded = format!("{:0>width$}", digits, width = places + 1);
        let (int, frac) = padded.split_at(padded.len() - places);
        format!("{int}.{frac}")
    };
    if negative && quotient_is_nonzero(&body) {
        format!("-{body}")
    } else {
        body
    }
}

fn quotient_is_nonzero(body: &str) -> bool {
    body.chars().any(|c| c.is_ascii_digit() && c != '0')
}

fn decimal_from_ratio(r: &BigRational) -> String {
    let mut den = r.denom().clone();
    let mut places = 0usize;
    for factor in [2u32, 5u32] {
        let factor = BigInt::from(factor);
        let mut count = 0usize;
        while (&den % &factor).is_zero() {
            den /= &factor;
            count += 1;
        }
        places = places.max(count);
    }
    if den.is_one() {
        trim_zeros(fixed_from_ratio(r, places.max(1)))
    } else {
        trim_zeros(fixed_from_ratio(r, 16))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0');
    let trimmed = trimmed.strip_suffix('.').unwrap_or(trimmed);
    if trimmed.is_empty() || trimmed == "-" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Exact {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_fixed_rounds_half_up() {
        assert_eq!(q(11, 16).to_fixed(2), "0.69");
        assert_eq!(q(6, 15).to_fixed(2), "0.40");
        assert_eq!(q(5, 8).to_fixed(2), "0.63");
        assert_eq!(q(1, 1).to_fixed(2), "1.00");
        assert_eq!(q(0, 1).to_fixed(2), "0.00");
        assert_eq!(q(2, 3).to_fixed(0), "1");
        assert_eq!(q(-1, 3).to_fixed(2), "-0.33");
    }

    #[test]
    fn rational_decimal_is_exact_when_terminating() {
        assert_eq!(q(11, 16).to_decimal(), "0.6875");
        assert_eq!(q(1, 2).to_decimal(), "0.5");
        assert_eq!(q(3, 1).to_decimal(), "3");
        assert_eq!(q(0, 1).to_decimal(), "0");
        assert_eq!(q(2, 3).to_decimal(), "0.6666666666666667");
    }

    #[test]
    fn rational64_matches_big() {
        let r = Rational64::new(11, 16);
        assert_eq!(r.to_fixed(2), "0.69");
        assert_eq!(r.to_decimal(), "0.6875");
    }

    #[test]
    fn floats_render() {
        assert_eq!(0.6875f64.to_fixed(2), "0.69");
        assert_eq!(0.5f32.to_decimal(), "0.5");
        assert_eq!(f64::from_count(3), 3.0);
    }
}
