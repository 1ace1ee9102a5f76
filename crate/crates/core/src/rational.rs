//! Helpers for arbitrary-precision rationals: string wire format and lossy
//! conversion to `f64`.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

pub fn parse(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.contains('.') || s.contains('e') || s.contains('E') {
        return Err(Error::Parse(format!("rational must be p/q, got {s:?}")));
    }
    let q = BigRational::from_str(s).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
    Ok(q)
}

pub fn to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    match q.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            // numerator or denominator too large for a direct conversion
            let shift = q.numer().bits() as i64 - q.denom().bits() as i64;
            let scaled = if shift > 0 {
                q / BigRational::from_integer(BigInt::from(1) << shift as usize)
            } else {
                q * BigRational::from_integer(BigInt::from(1) << (-shift) as usize)
            };
            scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
        }
    }
}

pub fn from_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// serde adapter: `BigRational` as a `"p/q"` string.
pub mod as_string {
    use super::*;

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

/// serde adapter: `Vec<BigRational>` as a list of `"p/q"` strings.
pub mod vec_as_strings {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&q.to_string())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigRational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse(s).map_err(serde::de::Error::custom)).collect()
    }
}
