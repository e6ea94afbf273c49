//! Collision-force modeling toolkit for collaborative robots.
//!
//! The core object is a log-linear polynomial model of peak impact force
//! over end-effector distance, height, and speed. Around it sit data
//! ingestion and synthesis, the two-stage term-selection fit, safe-speed
//! inversion and workspace maps, a planar-manipulator effective-mass
//! model, the standard power-and-force-limiting baseline, and error
//! reporting utilities.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod baselines;
pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod fitting;
pub mod fmt;
pub mod mechanics;
pub mod prediction;
pub mod stats;

pub use error::{Error, Result};

/// A mass that may be unbounded.
///
/// The infinite case is a first-class marker (not a large float) so that
/// "the inverse-mass term vanishes" is exact: a clamped body part in the
/// force-limit baseline, or a manipulator direction with no mobility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mass {
    Finite(f64),
    Infinite,
}

impl Mass {
    /// 1/m, exactly zero for the infinite marker.
    pub fn inverse(&self) -> f64 {
        match self {
            Mass::Finite(kg) => 1.0 / kg,
            Mass::Infinite => 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Mass::Finite(_))
    }

    /// Finite value in kg, or +inf.
    pub fn kg_or_infinity(&self) -> f64 {
        match self {
            Mass::Finite(kg) => *kg,
            Mass::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Mass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mass::Finite(kg) => write!(f, "{kg}"),
            Mass::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Mass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" => Ok(Mass::Infinite),
            text => {
                let kg: f64 = text.parse().map_err(|_| {
                    Error::Contract(format!("mass must be a number or 'inf', got '{s}'"))
                })?;
                if !kg.is_finite() || kg <= 0.0 {
                    return Err(Error::Contract(format!(
                        "mass must be > 0 or 'inf', got {kg}"
                    )));
                }
                Ok(Mass::Finite(kg))
            }
        }
    }
}

impl Serialize for Mass {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Mass::Finite(kg) => serializer.serialize_f64(*kg),
            Mass::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Mass {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(kg) if kg.is_finite() && kg > 0.0 => Ok(Mass::Finite(kg)),
            Repr::Number(kg) => Err(serde::de::Error::custom(format!(
                "mass must be > 0 or \"inf\", got {kg}"
            ))),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
