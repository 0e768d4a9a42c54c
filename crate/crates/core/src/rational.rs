//! Exact rational numbers and their textual form.
//!
//! Every probability, payoff and time in this crate is a [`Q`]. Documents carry
//! them as strings: the reader accepts `"p/q"`, plain integers and decimal
//! literals (`"0.25"`, `"-1.5"`); the writer always emits lowest-terms `"p/q"`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;
use thiserror::Error;

/// Arbitrary-precision rational.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qu(n: usize) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, an integer or a decimal literal.
pub fn parse_q(text: &str) -> Result<Q, ParseRationalError> {
    let s = text.trim();
    let err = || ParseRationalError(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.starts_with('-');
        let digits = int_part.trim_start_matches(['-', '+']);
        if frac_part.is_empty() && digits.is_empty() {
            return Err(err());
        }
        if !digits.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let mut all = String::with_capacity(digits.len() + frac_part.len());
        all.push_str(digits);
        all.push_str(frac_part);
        let mantissa = if all.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(&all).map_err(|_| err())?
        };
        let scale = num_traits::pow(BigInt::from(10u32), frac_part.len());
        let value = Q::new(mantissa, scale);
        return Ok(if negative { -value } else { value });
    }
    BigInt::from_str(s).map(Q::from_integer).map_err(|_| err())
}

/// Lowest-terms `"p/q"`, with `q = 1` written out.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

pub fn floor(x: &Q) -> Q {
    x.floor()
}

pub fn in_unit_interval(x: &Q) -> bool {
    !x.is_negative() && *x <= Q::one()
}

/// `serde(with = ...)` adapter storing a rational as its `"p/q"` string.
pub mod as_string {
    use super::{fmt_q, parse_q, Q};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let text = String::deserialize(d)?;
        parse_q(&text).map_err(D::Error::custom)
    }
}

/// Same as [`as_string`] for sequences.
pub mod vec_as_string {
    use super::{fmt_q, parse_q, Q};
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&fmt_q(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_q(t).map_err(D::Error::custom))
            .collect()
    }
}
