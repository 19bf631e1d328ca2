//! Exact decimal helpers.
//!
//! Amounts travel through JSON as strings (`"120.5"`) so nothing is ever
//! routed through a binary float. Integer JSON numbers are accepted on input
//! for convenience; fractional JSON numbers are rejected.

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

/// Canonical rendering: trailing zeros stripped, no exponent, `0` for zero.
pub fn canonical(value: Decimal) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    value.normalize().to_string()
}

/// Parses a decimal from text, accepting plain and scientific notation.
pub fn parse(text: &str) -> Result<Decimal, rust_decimal::Error> {
    let trimmed = text.trim();
    if trimmed.contains(['e', 'E']) {
        Decimal::from_scientific(trimmed)
    } else {
        Decimal::from_str(trimmed)
    }
}

struct DecimalVisitor;

impl<'de> Visitor<'de> for DecimalVisitor {
    type Value = Decimal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a decimal string such as \"12.5\" or an integer")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
        parse(v).map_err(|e| E::custom(format!("invalid decimal {v:?}: {e}")))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
        Ok(Decimal::from(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
        Ok(Decimal::from(v))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decimal, E> {
        Err(E::custom(format!(
            "fractional JSON number {v} is not accepted; quote it as a string"
        )))
    }
}

/// `#[serde(with = "crate::decimal::string")]`
pub mod string {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Decimal, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&canonical(*value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Decimal, D::Error> {
        d.deserialize_any(DecimalVisitor)
    }
}

/// `#[serde(with = "crate::decimal::opt_string")]`
pub mod opt_string {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<Decimal>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_str(&canonical(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Decimal>, D::Error> {
        struct OptVisitor;

        impl<'de> Visitor<'de> for OptVisitor {
            type Value = Option<Decimal>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an optional decimal")
            }

            fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(None)
            }

            fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(None)
            }

            fn visit_some<D2: Deserializer<'de>>(self, d: D2) -> Result<Self::Value, D2::Error> {
                d.deserialize_any(DecimalVisitor).map(Some)
            }
        }

        d.deserialize_option(OptVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_strips_trailing_zeros() {
        assert_eq!(canonical(Decimal::from_str("120.500").unwrap()), "120.5");
        assert_eq!(canonical(Decimal::from_str("-0.00").unwrap()), "0");
        assert_eq!(canonical(Decimal::from_str("100").unwrap()), "100");
    }

    #[test]
    fn parse_accepts_scientific() {
        assert_eq!(parse("1.5e3").unwrap(), Decimal::from(1500));
        assert_eq!(parse(" 0.74 ").unwrap(), Decimal::from_str("0.74").unwrap());
    }

    #[test]
    fn fractional_json_numbers_are_rejected() {
        #[derive(serde::Deserialize)]
        struct Holder {
            #[serde(with = "string")]
            v: Decimal,
        }
        assert!(serde_json::from_str::<Holder>(r#"{"v": 0.1}"#).is_err());
        let h: Holder = serde_json::from_str(r#"{"v": 7}"#).unwrap();
        assert_eq!(h.v, Decimal::from(7));
        let h: Holder = serde_json::from_str(r#"{"v": "0.1"}"#).unwrap();
        assert_eq!(canonical(h.v), "0.1");
    }
}
