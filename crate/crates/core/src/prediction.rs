//! Model evaluation: point force predictions, inversion for the maximum
//! safe end-effector speed under a force limit, and workspace maps.

use serde::{Deserialize, Serialize};

use crate::dataio::GridSpec;
use crate::error::{Error, Result};
use crate::fitting::CfmModel;
use crate::fmt::format_sig;

/// Default multiplicative safety margin on predicted forces (+10%).
pub const DEFAULT_MARGIN_FACTOR: f64 = 1.10;

/// Coefficient groups smaller than this are treated as absent when solving
/// for the safe velocity.
const COEFF_EPS: f64 = 1e-12;

/// A force prediction, with a warning flag when the query point lies
/// outside the box the model was trained on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub force_n: f64,
    pub extrapolated: bool,
}

/// A safe-speed query: where, what force limit, and how conservative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyQuery {
    /// Permissible peak contact force (N).
    pub force_limit_n: f64,
    /// Multiplicative conservatism applied to predictions (>= 1).
    pub margin_factor: f64,
    pub distance_m: f64,
    pub height_m: f64,
}

impl SafetyQuery {
    pub fn validate(&self) -> Result<()> {
        if !self.force_limit_n.is_finite() || self.force_limit_n <= 0.0 {
            return Err(Error::Contract(format!(
                "force limit must be finite and > 0, got {}",
                self.force_limit_n
            )));
        }
        if !self.margin_factor.is_finite() || self.margin_factor < 1.0 {
            return Err(Error::Contract(format!(
                "margin factor must be >= 1, got {}",
                self.margin_factor
            )));
        }
        if !self.distance_m.is_finite() || !self.height_m.is_finite() {
            return Err(Error::Contract("query point must be finite".into()));
        }
        Ok(())
    }
}

/// The safe-speed solution for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeVelocity {
    pub velocity_mps: f64,
    /// True when the analytic solution exceeded the model's velocity range
    /// and was cut back to the range maximum.
    pub clamped: bool,
    /// True when the answer relies on the model outside its training box
    /// (query position outside, or solution below the measured speeds).
    pub extrapolated: bool,
}

/// Anything that predicts a peak impact force at a workspace state.
pub trait ForcePredictor {
    fn predict_force_n(&self, distance_m: f64, height_m: f64, velocity_mps: f64) -> Result<f64>;
}

impl ForcePredictor for CfmModel {
    fn predict_force_n(&self, distance_m: f64, height_m: f64, velocity_mps: f64) -> Result<f64> {
        predict_force(self, distance_m, height_m, velocity_mps).map(|p| p.force_n)
    }
}

impl<F> ForcePredictor for F
where
    F: Fn(f64, f64, f64) -> Result<f64>,
{
    fn predict_force_n(&self, distance_m: f64, height_m: f64, velocity_mps: f64) -> Result<f64> {
        self(distance_m, height_m, velocity_mps)
    }
}

/// Evaluates the model at one state. Out-of-box states are allowed but
/// flagged as extrapolated.
pub fn predict_force(
    model: &CfmModel,
    distance_m: f64,
    height_m: f64,
    velocity_mps: f64,
) -> Result<Prediction> {
    for (name, value) in [
        ("distance", distance_m),
        ("height", height_m),
        ("velocity", velocity_mps),
    ] {
        if !value.is_finite() {
            return Err(Error::Contract(format!("{name} must be finite, got {value}")));
        }
    }
    let force_n = model
        .linear_predictor(distance_m, height_m, velocity_mps)
        .exp();
    Ok(Prediction {
        force_n,
        extrapolated: !model.domain.contains(distance_m, height_m, velocity_mps),
    })
}

/// Groups the model's terms by velocity power at a fixed position, so the
/// log-force becomes `A + B*v + C*v^2`.
fn velocity_polynomial(model: &CfmModel, distance_m: f64, height_m: f64) -> Result<[f64; 3]> {
    let mut groups = [0.0; 3];
    for (term, &beta) in model.terms.iter().zip(&model.coefficients) {
        if term.exp_v > 2 {
            return Err(Error::Contract(format!(
                "term {term} has velocity degree {} > 2; no closed-form speed inversion",
                term.exp_v
            )));
        }
        groups[term.exp_v as usize] +=
            beta * distance_m.powi(term.exp_d as i32) * height_m.powi(term.exp_h as i32);
    }
    Ok(groups)
}

/// Slope of the log-force in velocity at one state.
pub fn velocity_gradient(model: &CfmModel, distance_m: f64, height_m: f64, velocity_mps: f64) -> f64 {
    model
        .terms
        .iter()
        .zip(&model.coefficients)
        .filter(|(t, _)| t.exp_v >= 1)
        .map(|(t, &beta)| {
            beta * f64::from(t.exp_v)
                * distance_m.powi(t.exp_d as i32)
                * height_m.powi(t.exp_h as i32)
                * velocity_mps.powi(t.exp_v as i32 - 1)
        })
        .sum()
}

/// Minimum of [`velocity_gradient`] over a uniform sample of the model's
/// training box. Positive means force rises with speed everywhere sampled,
/// which justifies taking the smallest positive root in the inversion.
pub fn min_velocity_gradient(model: &CfmModel, samples_per_axis: usize) -> f64 {
    let axis = |(lo, hi): (f64, f64)| {
        let n = samples_per_axis.max(2);
        (0..n)
            .map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect::<Vec<f64>>()
    };
    let mut min = f64::INFINITY;
    for &d in &axis(model.domain.distance_m) {
        for &h in &axis(model.domain.height_m) {
            for &v in &axis(model.domain.velocity_mps) {
                min = min.min(velocity_gradient(model, d, h, v));
            }
        }
    }
    min
}

/// Largest end-effector speed whose (margin-scaled) predicted force stays
/// at or below the query's limit.
///
/// Solves `C v^2 + B v + (A - ln(limit/margin)) = 0` for the coefficient
/// groups of [`velocity_polynomial`] and returns the smallest positive
/// root. When the limit is never reached the speed is cut to the top of the
/// model's velocity range (`clamped`); when the position is outside the
/// training box or the root is below the measured speeds the answer is
/// marked `extrapolated`.
pub fn max_safe_velocity(model: &CfmModel, query: &SafetyQuery) -> Result<SafeVelocity> {
    query.validate()?;
    let (d, h) = (query.distance_m, query.height_m);
    let [a, b, c] = velocity_polynomial(model, d, h)?;
    let target = (query.force_limit_n / query.margin_factor).ln();
    let (v_min, v_max) = model.domain.velocity_mps;

    if c.abs() < COEFF_EPS && b.abs() < COEFF_EPS {
        return Err(Error::VelocityIndependent {
            distance_m: d,
            height_m: h,
        });
    }
    // Zero-speed force floor already over the limit: no approach speed is
    // safe. This must come before root selection — a concave log-force can
    // still dip below the limit at high speed, but that branch of the
    // parabola is far outside the model's validity.
    if a >= target {
        return Err(Error::Infeasible {
            distance_m: d,
            height_m: h,
            force_limit_n: query.force_limit_n,
        });
    }

    let position_outside = !model.domain.contains_position(d, h);
    // Below the floor at v = 0 and continuous: the force stays under the
    // limit up to the first upward crossing, or everywhere if none exists.
    let (velocity_mps, clamped, below_measured) = match smallest_positive_root(c, b, a - target) {
        Some(r) if r <= v_max => (r, false, r < v_min),
        // Crossing beyond the measured range: the whole range is safe.
        Some(_) => (v_max, true, false),
        // The limit is never reached at any speed.
        None => (v_max, true, false),
    };
    Ok(SafeVelocity {
        velocity_mps,
        clamped,
        extrapolated: position_outside || below_measured,
    })
}

/// Smallest strictly positive root of `c2 x^2 + c1 x + c0 = 0`, using the
/// cancellation-safe quadratic form. Returns None when no positive real
/// root exists (including the degenerate constant case).
fn smallest_positive_root(c2: f64, c1: f64, c0: f64) -> Option<f64> {
    if c2.abs() < COEFF_EPS {
        if c1.abs() < COEFF_EPS {
            return None;
        }
        let r = -c0 / c1;
        return (r > 0.0).then_some(r);
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    let mut roots = [q / c2, if q.abs() > 0.0 { c0 / q } else { -c1 / c2 }];
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.into_iter().find(|&r| r > 0.0)
}

/// What a workspace map's cells contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    /// Predicted peak force (N) at a fixed speed.
    Force,
    /// Maximum safe speed (m/s) under a force limit.
    Speed,
    /// Directional effective mass (kg) of a manipulator.
    EffectiveMass,
}

impl MapKind {
    pub fn unit(&self) -> &'static str {
        match self {
            MapKind::Force => "N",
            MapKind::Speed => "m/s",
            MapKind::EffectiveMass => "kg",
        }
    }
}

/// Per-cell status marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    Ok,
    /// Value depends on the model outside its training box.
    Extrapolated,
    /// Speed cut back to the top of the model's velocity range.
    Clamped,
    /// No speed satisfies the force limit here; value is NaN.
    Infeasible,
    /// No arm configuration reaches this cell; value is NaN.
    Unreachable,
    /// Effective mass is unbounded in this direction; value is +inf.
    Infinite,
}

impl CellFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::Extrapolated => "extrapolated",
            CellFlag::Clamped => "clamped",
            CellFlag::Infeasible => "infeasible",
            CellFlag::Unreachable => "unreachable",
            CellFlag::Infinite => "infinite",
        }
    }

    /// Single-character marker used in the text-grid rendering.
    fn marker(&self) -> &'static str {
        match self {
            CellFlag::Ok => "",
            CellFlag::Extrapolated => "*",
            CellFlag::Clamped => "^",
            CellFlag::Infeasible => "!",
            CellFlag::Unreachable => "x",
            CellFlag::Infinite => "oo",
        }
    }
}

/// One evaluated workspace cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub distance_m: f64,
    pub height_m: f64,
    pub value: f64,
    pub flag: CellFlag,
}

/// A scalar field over the (distance, height) plane.
///
/// Cells are stored height-major: index = h_index * n_distances + d_index,
/// both axes ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceMap {
    pub kind: MapKind,
    pub grid: GridSpec,
    pub cells: Vec<MapCell>,
}

impl WorkspaceMap {
    /// Builds a map by evaluating `eval` at every (d, h) grid point.
    pub fn build<F>(kind: MapKind, grid: &GridSpec, mut eval: F) -> Self
    where
        F: FnMut(f64, f64) -> (f64, CellFlag),
    {
        let mut cells = Vec::with_capacity(grid.heights_m.len() * grid.distances_m.len());
        for &h in &grid.heights_m {
            for &d in &grid.distances_m {
                let (value, flag) = eval(d, h);
                cells.push(MapCell {
                    distance_m: d,
                    height_m: h,
                    value,
                    flag,
                });
            }
        }
        Self {
            kind,
            grid: grid.clone(),
            cells,
        }
    }

    pub fn cell(&self, d_index: usize, h_index: usize) -> &MapCell {
        &self.cells[h_index * self.grid.distances_m.len() + d_index]
    }

    /// CSV export: one row per cell with a status flag column.
    pub fn to_csv<W: std::io::Write>(&self, writer: &mut W) -> Result<()> {
        writeln!(writer, "distance_m,height_m,value_{},flag", self.unit_token())?;
        for cell in &self.cells {
            writeln!(
                writer,
                "{},{},{},{}",
                format_sig(cell.distance_m, 9),
                format_sig(cell.height_m, 9),
                format_sig(cell.value, 9),
                cell.flag.as_str()
            )?;
        }
        Ok(())
    }

    fn unit_token(&self) -> &'static str {
        match self.kind {
            MapKind::Force => "n",
            MapKind::Speed => "mps",
            MapKind::EffectiveMass => "kg",
        }
    }

    /// Human-readable grid: distance columns ascending left to right,
    /// height rows descending top to bottom (highest row first).
    pub fn to_grid_text(&self) -> String {
        let mut out = String::new();
        let kind = match self.kind {
            MapKind::Force => "force",
            MapKind::Speed => "safe speed",
            MapKind::EffectiveMass => "effective mass",
        };
        out.push_str(&format!("# {} map ({})\n", kind, self.kind.unit()));
        out.push_str(
            "# flags: * extrapolated, ^ clamped, ! infeasible, x unreachable, oo infinite\n",
        );
        out.push_str("h_m \\ d_m");
        for &d in &self.grid.distances_m {
            out.push_str(&format!("  {:>14}", format_sig(d, 6)));
        }
        out.push('\n');
        for h_index in (0..self.grid.heights_m.len()).rev() {
            out.push_str(&format!("{:>9}", format_sig(self.grid.heights_m[h_index], 6)));
            for d_index in 0..self.grid.distances_m.len() {
                let cell = self.cell(d_index, h_index);
                let rendered = match cell.flag {
                    CellFlag::Infeasible => "!".to_string(),
                    CellFlag::Unreachable => "x".to_string(),
                    CellFlag::Infinite => "oo".to_string(),
                    flag => format!("{}{}", format_sig(cell.value, 9), flag.marker()),
                };
                out.push_str(&format!("  {rendered:>14}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Predicted force at every grid position for one fixed speed.
pub fn force_map(model: &CfmModel, grid: &GridSpec, velocity_mps: f64) -> Result<WorkspaceMap> {
    if !velocity_mps.is_finite() || velocity_mps <= 0.0 {
        return Err(Error::Contract(format!(
            "map velocity must be finite and > 0, got {velocity_mps}"
        )));
    }
    Ok(WorkspaceMap::build(MapKind::Force, grid, |d, h| {
        let force = model.linear_predictor(d, h, velocity_mps).exp();
        let flag = if model.domain.contains(d, h, velocity_mps) {
            CellFlag::Ok
        } else {
            CellFlag::Extrapolated
        };
        (force, flag)
    }))
}

/// Maximum safe speed at every grid position for one force limit. Per-cell
/// failures become sentinel cells rather than errors.
pub fn speed_map(model: &CfmModel, grid: &GridSpec, template: &SafetyQuery) -> Result<WorkspaceMap> {
    template.validate()?;
    let mut first_error: Option<Error> = None;
    let map = WorkspaceMap::build(MapKind::Speed, grid, |d, h| {
        let query = SafetyQuery {
            distance_m: d,
            height_m: h,
            ..*template
        };
        match max_safe_velocity(model, &query) {
            Ok(safe) => {
                let flag = if safe.clamped {
                    CellFlag::Clamped
                } else if safe.extrapolated {
                    CellFlag::Extrapolated
                } else {
                    CellFlag::Ok
                };
                (safe.velocity_mps, flag)
            }
            Err(Error::Infeasible { .. } | Error::VelocityIndependent { .. }) => {
                (f64::NAN, CellFlag::Infeasible)
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
                (f64::NAN, CellFlag::Infeasible)
            }
        }
    });
    // Structural problems (bad model terms) should surface, not hide in cells.
    match first_error {
        Some(e) => Err(e),
        None => Ok(map),
    }
}
