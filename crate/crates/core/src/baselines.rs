//! Power-and-force-limiting (PFL) velocity/force relation from the
//! collaborative-robot safety standard, used as a comparison baseline.
//!
//! The contact is modeled as a two-body spring: a robot of effective mass
//! `m_R` meets a body part of mass `m_H` and stiffness `k`, giving
//! `v = (F/sqrt(k)) * sqrt(1/m_R + 1/m_H)`. A clamped (constrained) impact
//! is the limit `1/m_H -> 0`, expressed here by [`Mass::Infinite`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Mass;

/// Default permissible quasi-static contact force (N).
pub const DEFAULT_QUASI_STATIC_FORCE_N: f64 = 140.0;
/// Default permissible transient contact force (N), twice the quasi-static
/// limit.
pub const DEFAULT_TRANSIENT_FORCE_N: f64 = 280.0;
/// Default body-part spring constant (N/m).
pub const DEFAULT_SPRING_CONSTANT_NPM: f64 = 75_000.0;

/// Parameters of the PFL spring model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PflParams {
    /// Permissible peak contact force (N).
    pub f_max_n: f64,
    /// Body-part spring constant (N/m).
    pub k_spring_npm: f64,
    /// Effective robot mass at the contact point (kg).
    pub m_robot_kg: f64,
    /// Human body-part mass; `Infinite` models a clamped body part.
    pub m_human_kg: Mass,
}

impl PflParams {
    pub fn new(f_max_n: f64, k_spring_npm: f64, m_robot_kg: f64, m_human_kg: Mass) -> Result<Self> {
        let params = Self {
            f_max_n,
            k_spring_npm,
            m_robot_kg,
            m_human_kg,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f_max_n", self.f_max_n),
            ("k_spring_npm", self.k_spring_npm),
            ("m_robot_kg", self.m_robot_kg),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Contract(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if let Mass::Finite(m) = self.m_human_kg {
            if !m.is_finite() || m <= 0.0 {
                return Err(Error::Contract(format!(
                    "m_human_kg must be > 0 or infinite, got {m}"
                )));
            }
        }
        Ok(())
    }

    /// `1/m_R + 1/m_H`, the inverse reduced mass of the contact pair.
    fn inverse_mass_sum(&self) -> f64 {
        1.0 / self.m_robot_kg + self.m_human_kg.inverse()
    }
}

/// Highest end-effector speed that keeps the peak contact force at or below
/// `p.f_max_n`.
pub fn pfl_max_velocity(p: &PflParams) -> f64 {
    p.f_max_n / p.k_spring_npm.sqrt() * p.inverse_mass_sum().sqrt()
}

/// Peak contact force produced by an impact at `velocity_mps`. Inverse of
/// [`pfl_max_velocity`]; `p.f_max_n` is not used.
pub fn pfl_force(velocity_mps: f64, p: &PflParams) -> f64 {
    velocity_mps * p.k_spring_npm.sqrt() / p.inverse_mass_sum().sqrt()
}

/// Half the total moving mass plus the payload: the standard's
/// rule-of-thumb effective robot mass.
pub fn effective_mass_ts15066(moving_mass_kg: f64, payload_kg: f64) -> f64 {
    moving_mass_kg / 2.0 + payload_kg
}
