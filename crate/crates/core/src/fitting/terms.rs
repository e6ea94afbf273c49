//! Monomial terms over (d, h, v) and design-matrix assembly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataio::MeasurementSet;
use crate::error::{Error, Result};

/// One monomial d^a * h^b * v^c of the regression basis.
///
/// `(0, 0, 0)` is the intercept. Terms order by total degree first, then by
/// exponent priority d > h > v, so `[1, d, h, v, d^2, d*h, d*v, h^2, ...]`.
/// That order is canonical everywhere: pools, models, serialized output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermSpec {
    /// Exponent of the distance d.
    pub exp_d: u32,
    /// Exponent of the height h.
    pub exp_h: u32,
    /// Exponent of the velocity v.
    pub exp_v: u32,
}

impl TermSpec {
    pub const INTERCEPT: TermSpec = TermSpec::new(0, 0, 0);

    pub const fn new(exp_d: u32, exp_h: u32, exp_v: u32) -> Self {
        Self { exp_d, exp_h, exp_v }
    }

    /// Total degree a + b + c.
    pub fn degree(&self) -> u32 {
        self.exp_d + self.exp_h + self.exp_v
    }

    pub fn is_intercept(&self) -> bool {
        self.degree() == 0
    }

    /// Evaluates the monomial at a workspace point.
    pub fn eval(&self, d: f64, h: f64, v: f64) -> f64 {
        d.powi(self.exp_d as i32) * h.powi(self.exp_h as i32) * v.powi(self.exp_v as i32)
    }
}

impl PartialOrd for TermSpec {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TermSpec {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Graded ordering: lower total degree first; within a degree the
        // lexicographically larger exponent tuple (d before h before v) wins,
        // which yields d^2 < d*h < d*v < h^2 < h*v < v^2.
        self.degree().cmp(&other.degree()).then_with(|| {
            (other.exp_d, other.exp_h, other.exp_v).cmp(&(self.exp_d, self.exp_h, self.exp_v))
        })
    }
}

impl std::fmt::Display for TermSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_intercept() {
            return write!(f, "1");
        }
        let mut parts = Vec::new();
        for (name, exp) in [("d", self.exp_d), ("h", self.exp_h), ("v", self.exp_v)] {
            match exp {
                0 => {}
                1 => parts.push(name.to_string()),
                _ => parts.push(format!("{name}^{exp}")),
            }
        }
        write!(f, "{}", parts.join("*"))
    }
}

/// All monomials in (d, h, v) of total degree <= `max_degree`, intercept
/// included, in canonical order. `max_degree = 3` yields 20 terms.
pub fn term_pool(max_degree: u32) -> Result<Vec<TermSpec>> {
    if max_degree < 1 {
        return Err(Error::Contract(format!(
            "term pool degree must be >= 1, got {max_degree}"
        )));
    }
    let mut pool = Vec::new();
    for a in 0..=max_degree {
        for b in 0..=max_degree - a {
            for c in 0..=max_degree - a - b {
                pool.push(TermSpec::new(a, b, c));
            }
        }
    }
    pool.sort();
    Ok(pool)
}

/// Builds the regressor matrix (one row per sample, one column per term) and
/// the ln(F) response vector.
pub fn design_matrix(
    samples: &MeasurementSet,
    terms: &[TermSpec],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if terms.is_empty() {
        return Err(Error::Contract("term list is empty".into()));
    }
    if samples.samples.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "dataset '{}' has no samples",
            samples.label
        )));
    }
    let n = samples.samples.len();
    let mut x = DMatrix::zeros(n, terms.len());
    let mut y = DVector::zeros(n);
    for (i, s) in samples.samples.iter().enumerate() {
        if s.force_n <= 0.0 {
            return Err(Error::Contract(format!(
                "sample {i} of '{}' has non-positive force {} N; ln(F) undefined",
                samples.label, s.force_n
            )));
        }
        for (j, t) in terms.iter().enumerate() {
            x[(i, j)] = t.eval(s.distance_m, s.height_m, s.velocity_mps);
        }
        y[i] = s.force_n.ln();
    }
    Ok((x, y))
}
