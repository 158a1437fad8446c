//! Exact rational scalars and their text form.
//!
//! Rationals cross every serialization boundary as `"p/q"` strings (or `"p"`
//! for integers) so that no value is ever rounded through a float.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational used for every exact computation.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{text}` is not a rational of the form p/q or p")]
pub struct ParseRationalError {
    pub text: String,
}

/// Parses `"p/q"` or `"p"` with optional sign on `p`. Zero denominators are rejected.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        text: text.to_string(),
    };
    let trimmed = text.trim();
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| err())?;
    let den = BigInt::from_str(den).map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}

/// Builds `num/den` from machine integers.
///
/// Panics if `den` is zero.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `max(value, 0)`.
pub fn positive_part(value: &Rational) -> Rational {
    if value.is_positive() {
        value.clone()
    } else {
        Rational::zero()
    }
}

/// Canonical text form: `"p/q"` in lowest terms, or `"p"` when integral.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

/// Plain decimal rendering with `digits` significant digits.
pub fn format_decimal(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let exponent = value.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exponent).max(0) as usize;
    format!("{value:.decimals$}")
}

/// Converts an `f64` to the exact rational it represents.
pub fn from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}

/// serde adapters that keep rationals as `"p/q"` strings.
pub mod serde_text {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_rational(&text).map_err(de::Error::custom)
    }

    pub mod vec {
        use serde::ser::SerializeSeq;

        use super::*;

        pub fn serialize<S: Serializer>(
            values: &[Rational],
            serializer: S,
        ) -> Result<S::Ok, S::Error> {
            let mut seq = serializer.serialize_seq(Some(values.len()))?;
            for value in values {
                seq.serialize_element(&format_rational(value))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            deserializer: D,
        ) -> Result<Vec<Rational>, D::Error> {
            let items = Vec::<Text>::deserialize(deserializer)?;
            Ok(items.into_iter().map(|Text(v)| v).collect())
        }

        /// Parses per element so decode errors point at the offending index.
        struct Text(Rational);

        impl<'de> Deserialize<'de> for Text {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                super::deserialize(deserializer).map(Text)
            }
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(
            value: &Option<Rational>,
            serializer: S,
        ) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => serializer.serialize_some(&format_rational(v)),
                None => serializer.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            deserializer: D,
        ) -> Result<Option<Rational>, D::Error> {
            let text = Option::<String>::deserialize(deserializer)?;
            text.map(|t| parse_rational(&t).map_err(de::Error::custom))
                .transpose()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("3/5").unwrap(), ratio(3, 5));
        assert_eq!(parse_rational("-2").unwrap(), int(-2));
        assert_eq!(parse_rational(" 4/8 ").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-6/-4").unwrap(), ratio(3, 2));
    }

    #[test]
    fn rejects_garbage() {
        for text in ["", "1/0", "0.5", "a/b", "1/2/3"] {
            assert!(parse_rational(text).is_err(), "{text}");
        }
    }

    #[test]
    fn text_form_is_lowest_terms() {
        assert_eq!(format_rational(&ratio(2, 4)), "1/2");
        assert_eq!(format_rational(&ratio(-6, 3)), "-2");
        assert_eq!(format_rational(&int(0)), "0");
    }

    #[test]
    fn decimal_has_twelve_significant_digits() {
        assert_eq!(format_decimal(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_decimal(1.0, 12), "1.00000000000");
        assert_eq!(format_decimal(0.0, 12), "0");
        assert_eq!(format_decimal(-1.5e-6, 12), "-0.00000150000000000");
    }
}
