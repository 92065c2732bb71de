//! Exact text encoding of `f64` values in the C99 `%a` hexadecimal form
//! (`0x1.91eb851eb851fp+1`), plus serde adapters for model parameters.
//!
//! Only the canonical form produced by [`format`] is accepted by [`parse`]:
//! a leading hex digit of `1` (normal) or `0` (zero/subnormal), at most
//! thirteen fraction digits and a decimal binary exponent.

use serde::{de, Deserialize, Deserializer, Serializer};

const FRACTION_BITS: u32 = 52;
const FRACTION_MASK: u64 = (1 << FRACTION_BITS) - 1;
const EXPONENT_BIAS: i64 = 1023;

pub fn format(value: f64) -> String {
    if value.is_nan() {
        return "nan".to_string();
    }
    let sign = if value.is_sign_negative() { "-" } else { "" };
    if value.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = value.to_bits();
    let biased = ((bits >> FRACTION_BITS) & 0x7ff) as i64;
    let fraction = bits & FRACTION_MASK;
    if biased == 0 && fraction == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exponent) = if biased == 0 {
        (0, 1 - EXPONENT_BIAS)
    } else {
        (1, biased - EXPONENT_BIAS)
    };
    let digits = format!("{fraction:013x}");
    let digits = digits.trim_end_matches('0');
    let exp_sign = if exponent >= 0 { "+" } else { "-" };
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exponent.abs())
    } else {
        format!("{sign}0x{lead}.{digits}p{exp_sign}{}", exponent.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a canonical hexadecimal float: '{0}'")]
pub struct ParseHexFloatError(String);

pub fn parse(text: &str) -> Result<f64, ParseHexFloatError> {
    let err = || ParseHexFloatError(text.to_string());
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let signed = |v: f64| if negative { -v } else { v };
    match body {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(signed(f64::INFINITY)),
        _ => {}
    }
    let body = body.strip_prefix("0x").ok_or_else(err)?;
    let (mantissa, exponent) = body.split_once('p').ok_or_else(err)?;
    let exponent: i64 = exponent.parse().map_err(|_| err())?;
    let (lead, digits) = match mantissa.split_once('.') {
        Some((lead, digits)) if !digits.is_empty() => (lead, digits),
        Some(_) => return Err(err()),
        None => (mantissa, ""),
    };
    if digits.len() > 13 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(err());
    }
    let fraction = if digits.is_empty() {
        0
    } else {
        u64::from_str_radix(digits, 16).map_err(|_| err())? << (4 * (13 - digits.len()))
    };
    let bits = match lead {
        "1" => {
            let biased = exponent + EXPONENT_BIAS;
            if !(1..=2046).contains(&biased) {
                return Err(err());
            }
            ((biased as u64) << FRACTION_BITS) | fraction
        }
        "0" if fraction == 0 => 0,
        "0" if exponent == 1 - EXPONENT_BIAS => fraction,
        _ => return Err(err()),
    };
    Ok(signed(f64::from_bits(bits)))
}

pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&format(*value))
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    let text = String::deserialize(deserializer)?;
    parse(&text).map_err(de::Error::custom)
}

/// Serde adapter for `Vec<f64>`.
pub mod vec {
    use serde::ser::SerializeSeq;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&super::format(*v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<f64>, D::Error> {
        let texts = Vec::<String>::deserialize(deserializer)?;
        texts
            .iter()
            .map(|t| super::parse(t).map_err(de::Error::custom))
            .collect()
    }
}
