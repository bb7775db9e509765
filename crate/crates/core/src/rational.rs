//! Arbitrary-precision rational scalar used throughout the crate.
//!
//! Wraps `num::BigRational` and fixes the external contract: values are
//! always stored in lowest terms with a positive denominator, parsing accepts
//! both fraction strings (`"3/10"`, `"-7/2"`) and finite decimal strings
//! (`"0.25"`, `"-1.5"`, `"4"`) exactly, and serde encodes values as strings
//! so no precision is lost in JSON round-trips.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal {0:?}")]
    Invalid(String),
    #[error("zero denominator in rational literal {0:?}")]
    ZeroDenominator(String),
}

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Ratio of two machine integers. Panics if `denom` is zero.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Self {
        assert!(!denom.is_zero(), "zero denominator");
        Rational(BigRational::new(numer, denom))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    /// Nearest `f64`; display convenience only, never fed back into the math.
    pub fn to_f64(&self) -> f64 {
        let numer = self.numer();
        let denom = self.denom();
        match (numer.to_string().parse::<f64>(), denom.to_string().parse::<f64>()) {
            (Ok(n), Ok(d)) => n / d,
            _ => f64::NAN,
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => match s.strip_prefix('+') {
            Some(rest) => (1, rest),
            None => (1, s),
        },
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", int_part, frac_part);
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(BigInt::from(sign) * numer, denom))
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        if let Some((numer, denom)) = s.split_once('/') {
            let numer: BigInt = numer
                .trim()
                .parse()
                .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
            let denom: BigInt = denom
                .trim()
                .parse()
                .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
            if denom.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            return Ok(Rational(BigRational::new(numer, denom)));
        }
        parse_decimal(s)
            .map(Rational)
            .ok_or_else(|| ParseRationalError::Invalid(s.to_string()))
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

macro_rules! forward_assign {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            fn $method(&mut self, rhs: Rational) {
                (self.0).$method(rhs.0);
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            fn $method(&mut self, rhs: &'a Rational) {
                (self.0).$method(&rhs.0);
            }
        }
    };
}

forward_assign!(AddAssign, add_assign);
forward_assign!(SubAssign, sub_assign);
forward_assign!(MulAssign, mul_assign);
forward_assign!(DivAssign, div_assign);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn parses_fractions_and_reduces() {
        assert_eq!(r("3/10"), Rational::new(3, 10));
        assert_eq!(r("6/20"), Rational::new(3, 10));
        assert_eq!(r("-7/2"), Rational::new(-7, 2));
        assert_eq!(r("7/-2"), Rational::new(-7, 2));
        assert_eq!(r(" 1/3 "), Rational::new(1, 3));
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(r("0.25"), Rational::new(1, 4));
        assert_eq!(r("-1.5"), Rational::new(-3, 2));
        assert_eq!(r("4"), Rational::from_int(4));
        assert_eq!(r(".5"), Rational::new(1, 2));
        assert_eq!(r("2."), Rational::from_int(2));
        assert_eq!(r("+0.1"), Rational::new(1, 10));
        // 0.1 really is 1/10, not the nearest double.
        assert_eq!(r("0.1") * Rational::from_int(10), Rational::one());
    }

    #[test]
    fn rejects_garbage() {
        assert!(Rational::from_str("").is_err());
        assert!(Rational::from_str("1/0").is_err());
        assert!(Rational::from_str("a/b").is_err());
        assert!(Rational::from_str("1.2.3").is_err());
        assert!(Rational::from_str("1e3").is_err());
        assert!(Rational::from_str(".").is_err());
        assert!(Rational::from_str("-").is_err());
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(r("6/20").to_string(), "3/10");
        assert_eq!(r("-4/2").to_string(), "-2");
        assert_eq!(r("0.75").to_string(), "3/4");
        assert_eq!(Rational::zero().to_string(), "0");
    }

    #[test]
    fn arithmetic_is_exact() {
        let third = Rational::new(1, 3);
        let sum = &third + &third + &third;
        assert_eq!(sum, Rational::one());
        assert_eq!(Rational::new(1, 10) + Rational::new(2, 10), Rational::new(3, 10));
        assert_eq!(-&third, Rational::new(-1, 3));
        assert_eq!(Rational::new(3, 4) / Rational::new(3, 2), Rational::new(1, 2));
    }

    #[test]
    fn ordering_and_signs() {
        assert!(r("1/3") < r("1/2"));
        assert!(r("-1/2") < r("-1/3"));
        assert!(r("-1").is_negative());
        assert!(r("2").is_positive());
        assert!(Rational::zero().is_zero());
        assert_eq!(r("-3/2").abs(), r("3/2"));
    }

    #[test]
    fn serde_round_trips_as_strings() {
        let v = r("-7/3");
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "\"-7/3\"");
        let back: Rational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        let from_decimal: Rational = serde_json::from_str("\"0.2\"").unwrap();
        assert_eq!(from_decimal, Rational::new(1, 5));
    }

    #[test]
    fn to_f64_is_close() {
        assert_eq!(r("1/2").to_f64(), 0.5);
        assert!((r("1/3").to_f64() - 1.0 / 3.0).abs() < 1e-15);
    }
}
