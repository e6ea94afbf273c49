//! Ordinary least squares on ln(F) with aliasing detection and full
//! coefficient diagnostics.

use nalgebra::DMatrix;

use crate::dataio::MeasurementSet;
use crate::error::{Error, Result};
use crate::fitting::terms::{design_matrix, TermSpec};
use crate::stats::student_t_two_sided_p;

/// Relative residual-norm threshold below which a design column counts as a
/// linear combination of the columns before it. Exact dependencies (a cubic
/// on a three-level grid) land near 1e-15; genuinely independent polynomial
/// columns on physical grids stay above 1e-5.
pub const ALIAS_REL_TOL: f64 = 1e-8;

/// An ln-residual sum of squares below `EXACT_FIT_REL_RSS * TSS` marks an
/// exact fit, where t-statistics degenerate.
const EXACT_FIT_REL_RSS: f64 = 1e-12;

/// Coefficient magnitude separating "present" from "numerically zero" terms
/// in an exact fit.
const EXACT_FIT_COEFF_FLOOR: f64 = 1e-9;

/// Result of one least-squares fit.
///
/// `terms` holds the columns actually regressed on; columns of `requested`
/// that were linearly dependent on earlier ones appear in `aliased` instead
/// and have no coefficient. All per-coefficient vectors align with `terms`.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Terms as passed in, in order.
    pub requested: Vec<TermSpec>,
    /// Independent terms that received coefficients.
    pub terms: Vec<TermSpec>,
    /// Terms dropped as linear combinations of earlier columns.
    pub aliased: Vec<TermSpec>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Root mean squared error of the ln(F) residuals, sqrt(RSS/n).
    pub rmse_ln: f64,
    /// Coefficient of determination in ln space.
    pub r_squared_ln: f64,
    /// Root mean squared error of the force residuals in newtons.
    pub rmse_force_n: f64,
    /// Coefficient of determination on the force scale.
    pub r_squared_force: f64,
    /// Residual degrees of freedom, n - |terms|.
    pub dof: usize,
    pub n_samples: usize,
}

impl OlsFit {
    /// Coefficient of `term`, or `None` when the term was aliased or absent.
    pub fn coefficient(&self, term: TermSpec) -> Option<f64> {
        self.index_of(term).map(|i| self.coefficients[i])
    }

    /// p-value of `term`, or `None` when the term was aliased or absent.
    pub fn p_value(&self, term: TermSpec) -> Option<f64> {
        self.index_of(term).map(|i| self.p_values[i])
    }

    fn index_of(&self, term: TermSpec) -> Option<usize> {
        self.terms.iter().position(|&t| t == term)
    }

    /// ln-scale linear predictor at a workspace point.
    pub fn linear_predictor(&self, d: f64, h: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .zip(&self.coefficients)
            .map(|(t, c)| c * t.eval(d, h, v))
            .sum()
    }
}

/// Scans columns left to right and keeps those that extend the column space.
///
/// Modified Gram-Schmidt with a second orthogonalization pass; returns the
/// kept column indices. Scanning in canonical term order makes lower-degree
/// terms win over the higher-degree columns they alias, so a pure cube on a
/// three-level grid is dropped rather than the quadratic it shadows.
fn independent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let n = x.nrows();
    let mut kept = Vec::new();
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    for j in 0..x.ncols() {
        let mut v = x.column(j).clone_owned();
        let norm0 = v.norm();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= ALIAS_REL_TOL * norm0 || basis.len() == n {
            continue;
        }
        basis.push(v / norm);
        kept.push(j);
    }
    kept
}

/// Fits ln(force) = X * beta by least squares over the given terms.
///
/// Aliased columns are detected first and excluded from the solve. Standard
/// errors come from sqrt(diag((X'X)^-1) * RSS/dof) and p-values from a
/// two-sided Student-t test with `dof` degrees of freedom. On an exact fit
/// (RSS below round-off of the response variance, or dof = 0) the p-value is
/// 0 for coefficients larger than 1e-9 in magnitude and 1 otherwise.
pub fn fit_ols(samples: &MeasurementSet, terms: &[TermSpec]) -> Result<OlsFit> {
    let (x_full, y) = design_matrix(samples, terms)?;
    let n = x_full.nrows();
    // Refuse requests with more terms than samples outright. Dependency
    // pruning could always cut the columns down to the sample count, but a
    // "fit" born that way says nothing about the requested model.
    if n < terms.len() {
        return Err(Error::Underdetermined {
            n_samples: n,
            n_terms: terms.len(),
        });
    }

    let kept_idx = independent_columns(&x_full);
    let p = kept_idx.len();
    let kept_terms: Vec<TermSpec> = kept_idx.iter().map(|&j| terms[j]).collect();
    let aliased: Vec<TermSpec> = (0..terms.len())
        .filter(|j| !kept_idx.contains(j))
        .map(|j| terms[j])
        .collect();

    let x = x_full.select_columns(kept_idx.iter());
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("triangular solve failed on retained columns".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Numerical("R inverse failed on retained columns".into()))?;

    let residuals = &y - &x * &beta;
    let rss: f64 = residuals.norm_squared();
    let y_mean = y.mean();
    let tss: f64 = y.iter().map(|yi| (yi - y_mean).powi(2)).sum();
    let rmse_ln = (rss / n as f64).sqrt();
    let r_squared_ln = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    // Force-scale counterparts of the same diagnostics.
    let forces: Vec<f64> = samples.samples.iter().map(|s| s.force_n).collect();
    let force_mean = forces.iter().sum::<f64>() / n as f64;
    let mut rss_f = 0.0;
    let mut tss_f = 0.0;
    for (i, &f) in forces.iter().enumerate() {
        let predicted = (x.row(i) * &beta)[0].exp();
        rss_f += (f - predicted).powi(2);
        tss_f += (f - force_mean).powi(2);
    }
    let rmse_force_n = (rss_f / n as f64).sqrt();
    let r_squared_force = if tss_f > 0.0 { 1.0 - rss_f / tss_f } else { 1.0 };

    let dof = n - p;
    let exact_fit = dof == 0 || rss <= EXACT_FIT_REL_RSS * tss;
    let sigma2 = if dof > 0 { rss / dof as f64 } else { 0.0 };

    let mut std_errors = Vec::with_capacity(p);
    let mut t_stats = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let diag_j: f64 = r_inv.row(j).iter().map(|v| v * v).sum();
        let se = (sigma2 * diag_j).sqrt();
        std_errors.push(se);
        if exact_fit {
            let significant = beta[j].abs() > EXACT_FIT_COEFF_FLOOR;
            t_stats.push(if significant { f64::INFINITY } else { 0.0 });
            p_values.push(if significant { 0.0 } else { 1.0 });
        } else {
            let t = beta[j] / se;
            t_stats.push(t);
            p_values.push(student_t_two_sided_p(t.abs(), dof as f64));
        }
    }

    Ok(OlsFit {
        requested: terms.to_vec(),
        terms: kept_terms,
        aliased,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        t_stats,
        p_values,
        rmse_ln,
        r_squared_ln,
        rmse_force_n,
        r_squared_force,
        dof,
        n_samples: n,
    })
}
