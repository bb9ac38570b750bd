//! Decimal-string serde helpers for MPFR reals.
//!
//! Values are written with enough digits to round-trip at their own
//! precision. On input the writer's precision is recovered from the digit
//! count when some candidate reprints the string exactly; otherwise the
//! value is read with room for every digit, never below 64 bits.

use rug::Float;
use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

pub fn to_string(x: &Float) -> String {
    x.to_string_radix(10, None)
}

/// Bits needed to hold every digit of a decimal literal.
pub fn bits_for(s: &str) -> u32 {
    let mantissa = s.split(['e', 'E']).next().unwrap_or("");
    let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count() as f64;
    ((digits * std::f64::consts::LOG2_10).ceil() as u32 + 8).max(super::MIN_PRECISION_BITS)
}

fn digit_count(s: &str) -> usize {
    s.split(['e', 'E']).next().unwrap_or("").chars().filter(|c| c.is_ascii_digit()).count()
}

pub fn from_str(s: &str) -> Result<Float, super::ArithError> {
    let s = s.trim();
    let n = digit_count(s);
    // a p-bit value prints with 1 + ceil(p log10 2) digits
    if n >= 3 {
        let lo = ((n - 2) as f64 / std::f64::consts::LOG10_2).floor() as u32 + 1;
        let hi = ((n - 1) as f64 / std::f64::consts::LOG10_2).floor() as u32;
        let range = lo.max(super::MIN_PRECISION_BITS)..=hi;
        let (round, odd): (Vec<u32>, Vec<u32>) = range.partition(|b| b % 64 == 0);
        for bits in round.into_iter().chain(odd) {
            if let Ok(x) = super::parse_float(s, bits) {
                if to_string(&x) == s {
                    return Ok(x);
                }
            }
        }
    }
    super::parse_float(s, bits_for(s))
}

pub fn serialize<S: Serializer>(x: &Float, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&to_string(x))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Float, D::Error> {
    let s = String::deserialize(d)?;
    from_str(&s).map_err(D::Error::custom)
}

pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[Float], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::to_string(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Float>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| super::from_str(s).map_err(D::Error::custom)).collect()
    }
}

pub mod pair {
    use super::*;

    pub fn serialize<S: Serializer>(x: &(Float, Float), s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&super::to_string(&x.0))?;
        t.serialize_element(&super::to_string(&x.1))?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(Float, Float), D::Error> {
        let (a, b) = <(String, String)>::deserialize(d)?;
        Ok((
            super::from_str(&a).map_err(D::Error::custom)?,
            super::from_str(&b).map_err(D::Error::custom)?,
        ))
    }
}
