//! Planar N-link manipulator model: kinematics, Jacobian, joint-space
//! inertia, and the directional effective mass felt at the end effector,
//! with workspace sweeps.
//!
//! The arm moves in a vertical plane; gravity never enters because the
//! effective mass is a purely kinetic quantity.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::dataio::GridSpec;
use crate::error::{Error, Result};
use crate::prediction::{CellFlag, MapKind, WorkspaceMap};
use crate::Mass;

/// Quadratic forms below this threshold count as a blocked direction
/// (infinite effective mass).
pub const INFINITE_MASS_FORM_THRESHOLD: f64 = 1e-12;

/// How link mass is distributed along each link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkInertiaModel {
    /// Uniform rod: centroid at the middle, rotational inertia m*l^2/12.
    UniformRod,
    /// All mass concentrated at the link tip: no rotational inertia of its
    /// own.
    PointMassAtTip,
}

impl FromStr for LinkInertiaModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-rod" => Ok(Self::UniformRod),
            "point-mass-at-tip" => Ok(Self::PointMassAtTip),
            other => Err(Error::Contract(format!(
                "unknown inertia model '{other}' (expected uniform-rod or point-mass-at-tip)"
            ))),
        }
    }
}

/// Which of the two closed-form two-link solutions to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Elbow {
    /// Second joint bent negative (elbow above the chord).
    Up,
    /// Second joint bent positive.
    Down,
}

impl FromStr for Elbow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Self::Up),
            "down" => Ok(Self::Down),
            other => Err(Error::Contract(format!(
                "unknown elbow branch '{other}' (expected up or down)"
            ))),
        }
    }
}

/// A serial chain of rigid links rotating in one plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarArm {
    pub link_lengths_m: Vec<f64>,
    pub link_masses_kg: Vec<f64>,
    pub inertia_model: LinkInertiaModel,
}

impl PlanarArm {
    pub fn new(
        link_lengths_m: Vec<f64>,
        link_masses_kg: Vec<f64>,
        inertia_model: LinkInertiaModel,
    ) -> Result<Self> {
        let arm = Self {
            link_lengths_m,
            link_masses_kg,
            inertia_model,
        };
        arm.validate()?;
        Ok(arm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.link_lengths_m.is_empty() {
            return Err(Error::Contract("arm needs at least one link".into()));
        }
        if self.link_lengths_m.len() != self.link_masses_kg.len() {
            return Err(Error::Contract(format!(
                "{} lengths vs {} masses",
                self.link_lengths_m.len(),
                self.link_masses_kg.len()
            )));
        }
        for (name, list) in [
            ("length", &self.link_lengths_m),
            ("mass", &self.link_masses_kg),
        ] {
            if let Some(bad) = list.iter().find(|x| !x.is_finite() || **x <= 0.0) {
                return Err(Error::Contract(format!(
                    "link {name} must be finite and > 0, got {bad}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_links(&self) -> usize {
        self.link_lengths_m.len()
    }

    fn check_config(&self, q: &JointConfig) -> Result<()> {
        if q.angles_rad.len() != self.n_links() {
            return Err(Error::Contract(format!(
                "{} joint angles for a {}-link arm",
                q.angles_rad.len(),
                self.n_links()
            )));
        }
        if let Some(bad) = q.angles_rad.iter().find(|a| !a.is_finite()) {
            return Err(Error::Contract(format!("joint angle must be finite, got {bad}")));
        }
        Ok(())
    }
}

/// Three-link approximation of a collaborative arm used throughout the
/// examples: masses [13, 4, 4] kg, lengths [0.5, 0.45, 0.05] m.
pub fn reference_three_link(inertia_model: LinkInertiaModel) -> PlanarArm {
    PlanarArm {
        link_lengths_m: vec![0.5, 0.45, 0.05],
        link_masses_kg: vec![13.0, 4.0, 4.0],
        inertia_model,
    }
}

/// Joint angles, one per link, measured relative to the previous link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub angles_rad: Vec<f64>,
}

impl JointConfig {
    pub fn new(angles_rad: Vec<f64>) -> Self {
        Self { angles_rad }
    }
}

/// A unit direction in the arm's plane along which an impact is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactDirection {
    ux: f64,
    uy: f64,
}

impl ImpactDirection {
    /// Normalizes the given vector; rejects zero or non-finite input.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Contract("impact direction must be finite".into()));
        }
        let norm = x.hypot(y);
        if norm < 1e-12 {
            return Err(Error::Contract(
                "impact direction must have nonzero length".into(),
            ));
        }
        Ok(Self {
            ux: x / norm,
            uy: y / norm,
        })
    }

    /// Straight down, the direction used for tabletop impact sweeps.
    pub fn down() -> Self {
        Self { ux: 0.0, uy: -1.0 }
    }

    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.ux, self.uy)
    }
}

/// Base plus each link end, under cumulative joint angles.
fn joint_positions(arm: &PlanarArm, q: &JointConfig) -> Vec<Vector2<f64>> {
    let mut points = Vec::with_capacity(arm.n_links() + 1);
    points.push(Vector2::zeros());
    let mut angle = 0.0;
    for (&l, &dq) in arm.link_lengths_m.iter().zip(&q.angles_rad) {
        angle += dq;
        let last = *points.last().unwrap();
        points.push(last + l * Vector2::new(angle.cos(), angle.sin()));
    }
    points
}

/// End-effector position and absolute orientation.
pub fn fk_planar(arm: &PlanarArm, q: &JointConfig) -> Result<(Vector2<f64>, f64)> {
    arm.check_config(q)?;
    let position = *joint_positions(arm, q).last().unwrap();
    Ok((position, q.angles_rad.iter().sum()))
}

/// Closed-form inverse kinematics for a three-link arm with a prescribed
/// end-effector orientation.
///
/// The wrist (joint 3) is placed one last-link length behind the target
/// along the orientation; joints 1-2 then solve the two-link reach and
/// joint 3 makes up the remaining orientation. [`fk_planar`] round-trips
/// the result to well under 1e-9 m.
pub fn ik_planar3(
    arm: &PlanarArm,
    target: Vector2<f64>,
    ee_orientation_rad: f64,
    elbow: Elbow,
) -> Result<JointConfig> {
    if arm.n_links() != 3 {
        return Err(Error::Contract(format!(
            "closed-form inverse kinematics needs exactly 3 links, arm has {}",
            arm.n_links()
        )));
    }
    if !target.x.is_finite() || !target.y.is_finite() || !ee_orientation_rad.is_finite() {
        return Err(Error::Contract("IK target must be finite".into()));
    }
    let (l1, l2, l3) = (
        arm.link_lengths_m[0],
        arm.link_lengths_m[1],
        arm.link_lengths_m[2],
    );
    let wrist = target - l3 * Vector2::new(ee_orientation_rad.cos(), ee_orientation_rad.sin());
    let r = wrist.norm();
    let (reach_max, reach_min) = (l1 + l2, (l1 - l2).abs());
    // Tolerate boundary round-off before declaring the point unreachable.
    let c2 = (r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if c2 > 1.0 + 1e-9 {
        return Err(Error::Unreachable {
            deficit_m: r - reach_max,
        });
    }
    if c2 < -1.0 - 1e-9 {
        return Err(Error::Unreachable {
            deficit_m: reach_min - r,
        });
    }
    let c2 = c2.clamp(-1.0, 1.0);
    let q2 = match elbow {
        Elbow::Up => -c2.acos(),
        Elbow::Down => c2.acos(),
    };
    let q1 = wrist.y.atan2(wrist.x) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
    let q3 = ee_orientation_rad - q1 - q2;
    Ok(JointConfig::new(vec![q1, q2, q3]))
}

/// End-effector translational Jacobian, 2 x N. Column j is the velocity of
/// the end effector per unit rate of joint j: the 90-degree rotation of the
/// arm from joint j to the end effector.
pub fn jacobian(arm: &PlanarArm, q: &JointConfig) -> Result<DMatrix<f64>> {
    arm.check_config(q)?;
    let points = joint_positions(arm, q);
    let ee = *points.last().unwrap();
    let n = arm.n_links();
    let mut j = DMatrix::zeros(2, n);
    for col in 0..n {
        let lever = ee - points[col];
        j[(0, col)] = -lever.y;
        j[(1, col)] = lever.x;
    }
    Ok(j)
}

/// Joint-space inertia matrix, N x N symmetric positive definite, built
/// from per-link centroid Jacobians:
/// `M(q) = sum_i m_i Jv_i' Jv_i + I_i Jw_i' Jw_i`.
pub fn inertia_matrix(arm: &PlanarArm, q: &JointConfig) -> Result<DMatrix<f64>> {
    arm.check_config(q)?;
    let points = joint_positions(arm, q);
    let n = arm.n_links();
    let mut m = DMatrix::zeros(n, n);
    let mut angle = 0.0;
    for i in 0..n {
        angle += q.angles_rad[i];
        let (l, link_mass) = (arm.link_lengths_m[i], arm.link_masses_kg[i]);
        let (centroid_offset, rot_inertia) = match arm.inertia_model {
            LinkInertiaModel::UniformRod => (l / 2.0, link_mass * l * l / 12.0),
            LinkInertiaModel::PointMassAtTip => (l, 0.0),
        };
        let centroid = points[i] + centroid_offset * Vector2::new(angle.cos(), angle.sin());
        // Centroid Jacobian: joints up to i move this link, later ones don't.
        let mut jv = DMatrix::zeros(2, n);
        for col in 0..=i {
            let lever = centroid - points[col];
            jv[(0, col)] = -lever.y;
            jv[(1, col)] = lever.x;
        }
        m += link_mass * jv.transpose() * &jv;
        if rot_inertia > 0.0 {
            // The angular-rate Jacobian is ones up to column i, so its
            // outer product adds I_i over the leading (i+1) x (i+1) block.
            for row in 0..=i {
                for col in 0..=i {
                    m[(row, col)] += rot_inertia;
                }
            }
        }
    }
    Ok(m)
}

/// Mass an obstacle effectively meets when the end effector hits it along
/// `u`: the inverse of the quadratic form `u' J M^-1 J' u`. Directions the
/// arm cannot move in give [`Mass::Infinite`].
pub fn effective_mass(arm: &PlanarArm, q: &JointConfig, u: &ImpactDirection) -> Result<Mass> {
    let j = jacobian(arm, q)?;
    let m = inertia_matrix(arm, q)?;
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("inertia matrix is not positive definite".into()))?;
    let jtu: DVector<f64> = j.transpose() * u.as_vector();
    let form = jtu.dot(&chol.solve(&jtu));
    if form < INFINITE_MASS_FORM_THRESHOLD {
        Ok(Mass::Infinite)
    } else {
        Ok(Mass::Finite(1.0 / form))
    }
}

/// Effective mass over a positional grid: inverse kinematics at each
/// (d, h) cell, then [`effective_mass`]. Unreachable cells become
/// sentinels; blocked directions become infinite cells.
pub fn effective_mass_map(
    arm: &PlanarArm,
    grid: &GridSpec,
    u: &ImpactDirection,
    ee_orientation_rad: f64,
    elbow: Elbow,
) -> Result<WorkspaceMap> {
    if arm.n_links() != 3 {
        return Err(Error::Contract(format!(
            "effective-mass maps need a 3-link arm, got {} links",
            arm.n_links()
        )));
    }
    let mut first_error: Option<Error> = None;
    let map = WorkspaceMap::build(MapKind::EffectiveMass, grid, |d, h| {
        let q = match ik_planar3(arm, Vector2::new(d, h), ee_orientation_rad, elbow) {
            Ok(q) => q,
            Err(Error::Unreachable { .. }) => return (f64::NAN, CellFlag::Unreachable),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
                return (f64::NAN, CellFlag::Unreachable);
            }
        };
        match effective_mass(arm, &q, u) {
            Ok(Mass::Finite(kg)) => (kg, CellFlag::Ok),
            Ok(Mass::Infinite) => (f64::INFINITY, CellFlag::Infinite),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
                (f64::NAN, CellFlag::Unreachable)
            }
        }
    });
    match first_error {
        Some(e) => Err(e),
        None => Ok(map),
    }
}
