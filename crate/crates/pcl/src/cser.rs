//! Serde helpers for complex scalars in JSON configs, and CSV number cells.
//!
//! A complex number is written as `[re, im]`; on input a bare number is also
//! accepted and read as a real value.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Real(f64),
    Pair([f64; 2]),
}

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    Ok(match Repr::deserialize(d)? {
        Repr::Real(x) => Complex64::new(x, 0.0),
        Repr::Pair([re, im]) => Complex64::new(re, im),
    })
}

pub mod opt {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        z.map(|z| [z.re, z.im]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Complex64>, D::Error> {
        Ok(Option::<Repr>::deserialize(d)?.map(|r| match r {
            Repr::Real(x) => Complex64::new(x, 0.0),
            Repr::Pair([re, im]) => Complex64::new(re, im),
        }))
    }
}

/// CSV cell for a float: shortest round-trip form, with an exponent for
/// very small or large magnitudes.
pub fn cell(v: f64) -> String {
    format!("{v:?}")
}
