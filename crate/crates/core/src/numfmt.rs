//! Fixed-precision number formatting for golden-stable outputs.
//!
//! Every float written to JSON or CSV goes through [`fixed`], which prints 17
//! significant digits in scientific notation. Non-finite values are written
//! as the strings `inf`, `-inf` and `nan`.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{Error as _, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

pub fn fixed(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x == 0.0 {
        // collapse -0.0 so outputs do not depend on the sign of zero
        format!("{:.16e}", 0.0)
    } else {
        format!("{:.16e}", x)
    }
}

fn parse_special(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        "nan" | "NaN" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

/// Wrapper that serializes a float with [`fixed`] as a bare JSON number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed(pub f64);

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(fixed(self.0)).map_err(S::Error::custom)?;
            raw.serialize(serializer)
        } else {
            serializer.serialize_str(&fixed(self.0))
        }
    }
}

struct FloatVisitor;

impl<'de> Visitor<'de> for FloatVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
    }
    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }
    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }
    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }
    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse_special(v).ok_or_else(|| E::custom(format!("not a number: {v:?}")))
    }
}

/// `#[serde(with = "numfmt::float")]` for `f64` fields.
pub mod float {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        Fixed(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(FloatVisitor)
    }
}

/// `#[serde(with = "numfmt::float_seq")]` for `Vec<f64>` fields.
pub mod float_seq {
    use super::*;
    use serde::Deserialize;

    #[derive(Deserialize)]
    struct Item(#[serde(with = "super::float")] f64);

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|&x| Fixed(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let items = Vec::<Item>::deserialize(d)?;
        Ok(items.into_iter().map(|i| i.0).collect())
    }
}

/// `#[serde(with = "numfmt::float_pair")]` for `[f64; 2]` fields.
pub mod float_pair {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[f64; 2], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|&x| Fixed(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 2], D::Error> {
        let v = super::float_seq::deserialize(d)?;
        <[f64; 2]>::try_from(v.as_slice())
            .map_err(|_| de::Error::custom(format!("expected 2 numbers, got {}", v.len())))
    }
}

/// Same as [`float`] for `Option<f64>`; `None` is written as `null`.
pub mod float_opt {
    use super::*;
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => Fixed(*v).serialize(s),
            None => s.serialize_none(),
        }
    }

    #[derive(Deserialize)]
    struct Item(#[serde(with = "super::float")] f64);

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Item>::deserialize(d)?.map(|i| i.0))
    }
}
