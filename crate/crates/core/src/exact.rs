//! Exact rational quantities: angular frequencies and lengths.
//!
//! Frequencies must be commensurable for a trace to close, so they are kept
//! as reduced fractions and never pass through floating point until a pen
//! position is evaluated. Lengths use the same representation so that
//! rolling residuals and sliding rates come out exact.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Arbitrary-precision reduced fraction.
pub type Exact = BigRational;

pub fn exact(numer: i64, denom: i64) -> Exact {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn exact_int(value: i64) -> Exact {
    BigRational::from_integer(BigInt::from(value))
}

pub fn to_f64(value: &Exact) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Render as `"p"` when integral and `"p/q"` otherwise.
pub fn format_exact(value: &Exact) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Parse `"p"` or `"p/q"`. Decimals are rejected.
pub fn parse_fraction(text: &str) -> Result<Exact, Error> {
    let text = text.trim();
    let bad = || Error::Parse(format!("expected an integer or p/q fraction, got {text:?}"));
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let numer = BigInt::from_str(numer).map_err(|_| bad())?;
    let denom = BigInt::from_str(denom).map_err(|_| bad())?;
    if denom.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {text:?}")));
    }
    Ok(BigRational::new(numer, denom))
}

/// Parse `"p"`, `"p/q"`, or a plain decimal such as `"12.5"` or `"-0.25"`.
/// Decimals are converted exactly (`"0.1"` is `1/10`).
pub fn parse_decimal_or_fraction(text: &str) -> Result<Exact, Error> {
    let trimmed = text.trim();
    if trimmed.contains('/') || !trimmed.contains(['.', 'e', 'E']) {
        return parse_fraction(trimmed);
    }
    let bad = || Error::Parse(format!("expected a decimal or p/q fraction, got {text:?}"));
    let (mantissa, exponent) = match trimmed.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (trimmed, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(&all_digits).map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Convert a finite float through its shortest decimal representation, so
/// `0.1_f64` becomes `1/10` rather than the nearest binary fraction.
pub fn exact_from_f64(value: f64) -> Result<Exact, Error> {
    if !value.is_finite() {
        return Err(Error::Parse(format!("non-finite number {value}")));
    }
    parse_decimal_or_fraction(&format!("{value:?}"))
}

/// Greatest common divisor of two non-negative rationals: the largest `g`
/// such that both inputs are integer multiples of `g`. `gcd(x, 0) = x`.
pub fn rational_gcd(lhs: &Exact, rhs: &Exact) -> Exact {
    let lhs = lhs.abs();
    let rhs = rhs.abs();
    if lhs.is_zero() {
        return rhs;
    }
    if rhs.is_zero() {
        return lhs;
    }
    let numer = (lhs.numer() * rhs.denom()).gcd(&(rhs.numer() * lhs.denom()));
    BigRational::new(numer, lhs.denom() * rhs.denom())
}

/// Strictly positive angular frequency in rad/s, held as a reduced fraction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency(Exact);

impl Frequency {
    pub fn new(value: Exact) -> Result<Self, Error> {
        if value.is_positive() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidValue(format!(
                "frequency must be positive, got {}",
                format_exact(&value)
            )))
        }
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self, Error> {
        if denom == 0 {
            return Err(Error::InvalidValue("zero denominator".into()));
        }
        Self::new(exact(numer, denom))
    }

    pub fn integer(value: i64) -> Result<Self, Error> {
        Self::new(exact_int(value))
    }

    pub fn value(&self) -> &Exact {
        &self.0
    }

    pub fn into_inner(self) -> Exact {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.0)
    }

    /// Numerator of the reduced fraction.
    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.denom().is_one()
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_exact(&self.0))
    }
}

impl fmt::Debug for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frequency({self})")
    }
}

impl FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(parse_fraction(s)?)
    }
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        // Integers are accepted as JSON numbers; anything fractional must be a
        // "p/q" string so commensurability is explicit.
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(n) => Frequency::integer(n).map_err(de::Error::custom),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

/// Serde adapter for exact lengths and rates: written as `"p"`/`"p/q"`
/// strings, read from such strings, decimal strings, or JSON numbers.
pub mod serde_exact {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Exact, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_exact(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Exact, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(n) => Ok(exact_int(n)),
            Raw::Float(x) => exact_from_f64(x).map_err(de::Error::custom),
            Raw::Text(s) => parse_decimal_or_fraction(&s).map_err(de::Error::custom),
        }
    }
}
