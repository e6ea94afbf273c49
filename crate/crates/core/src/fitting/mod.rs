//! Polynomial force-model fitting: design matrices, OLS with diagnostics,
//! and the two-stage term-selection pipeline producing `CfmModel` instances.

mod ols;
mod select;
mod terms;

pub use ols::{fit_ols, OlsFit, ALIAS_REL_TOL};
pub use select::{
    p_value_filter, stepwise_eliminate, EliminationOutcome, EliminationStep, R2_SCORE_WEIGHT,
};
pub use terms::{design_matrix, term_pool, TermSpec};

use serde::{Deserialize, Serialize};

use crate::dataio::MeasurementSet;
use crate::error::{Error, Result};

/// Height spread below which a dataset counts as single-height for the
/// distance-velocity model fit.
pub const SINGLE_HEIGHT_TOLERANCE_M: f64 = 1e-6;

/// Fit-quality numbers for one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Root mean squared error of the ln(F) residuals, sqrt(RSS/n).
    pub rmse_ln: f64,
    /// Coefficient of determination in ln space.
    pub r_squared: f64,
    /// Newton-scale root mean squared error of the force residuals.
    pub rmse_force_n: f64,
    /// Coefficient of determination on the force scale.
    pub r_squared_force: f64,
    /// Per-coefficient standard errors, aligned with the model terms.
    pub std_errors: Vec<f64>,
    /// Per-coefficient two-sided p-values, aligned with the model terms.
    pub p_values: Vec<f64>,
    /// Residual degrees of freedom.
    pub dof: usize,
    pub n_samples: usize,
}

/// Axis-aligned box of the training data, used to flag extrapolation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DomainBox {
    pub distance_m: (f64, f64),
    pub height_m: (f64, f64),
    pub velocity_mps: (f64, f64),
}

impl DomainBox {
    /// Smallest box containing every sample of `set`.
    pub fn from_set(set: &MeasurementSet) -> Result<Self> {
        if set.samples.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "cannot take the domain of empty dataset '{}'",
                set.label
            )));
        }
        let fold = |get: fn(&crate::dataio::MeasurementSample) -> f64| {
            set.samples.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), s| (lo.min(get(s)), hi.max(get(s))),
            )
        };
        Ok(Self {
            distance_m: fold(|s| s.distance_m),
            height_m: fold(|s| s.height_m),
            velocity_mps: fold(|s| s.velocity_mps),
        })
    }

    /// True when the workspace point lies inside the box on all three axes.
    pub fn contains(&self, d: f64, h: f64, v: f64) -> bool {
        let inside = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
        inside(d, self.distance_m) && inside(h, self.height_m) && inside(v, self.velocity_mps)
    }

    /// True when (d, h) lies inside the positional part of the box.
    pub fn contains_position(&self, d: f64, h: f64) -> bool {
        let inside = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
        inside(d, self.distance_m) && inside(h, self.height_m)
    }
}

/// A fitted log-linear force model: ln(F) = sum over terms of
/// coefficient * d^a * h^b * v^c.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CfmModel {
    /// Dataset identifier the model was fitted on.
    pub label: String,
    /// Basis terms in canonical order, intercept first.
    pub terms: Vec<TermSpec>,
    /// Coefficients aligned with `terms`, on the ln(N) scale.
    pub coefficients: Vec<f64>,
    /// Fit statistics; absent for models specified directly from published
    /// coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FitDiagnostics>,
    /// Training-data ranges; evaluation outside them is extrapolation.
    pub domain: DomainBox,
}

impl CfmModel {
    /// Builds a model from an OLS fit and its training set.
    pub fn from_fit(label: &str, fit: &OlsFit, training: &MeasurementSet) -> Result<Self> {
        Ok(Self {
            label: label.to_string(),
            terms: fit.terms.clone(),
            coefficients: fit.coefficients.clone(),
            diagnostics: Some(FitDiagnostics {
                rmse_ln: fit.rmse_ln,
                r_squared: fit.r_squared_ln,
                rmse_force_n: fit.rmse_force_n,
                r_squared_force: fit.r_squared_force,
                std_errors: fit.std_errors.clone(),
                p_values: fit.p_values.clone(),
                dof: fit.dof,
                n_samples: fit.n_samples,
            }),
            domain: DomainBox::from_set(training)?,
        })
    }

    /// ln-scale linear predictor at a workspace point.
    pub fn linear_predictor(&self, d: f64, h: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .zip(&self.coefficients)
            .map(|(t, c)| c * t.eval(d, h, v))
            .sum()
    }

    /// Coefficient of a term, if the model contains it.
    pub fn coefficient(&self, term: TermSpec) -> Option<f64> {
        self.terms
            .iter()
            .position(|&t| t == term)
            .map(|i| self.coefficients[i])
    }

    /// Structural checks for models built by hand or read from disk:
    /// canonically ordered unique terms, aligned finite coefficients, and
    /// ordered domain bounds.
    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Serialization("model has no terms".into()));
        }
        if self.terms.len() != self.coefficients.len() {
            return Err(Error::Serialization(format!(
                "model '{}' has {} terms but {} coefficients",
                self.label,
                self.terms.len(),
                self.coefficients.len()
            )));
        }
        if !self.coefficients.iter().all(|c| c.is_finite()) {
            return Err(Error::Serialization(format!(
                "model '{}' has non-finite coefficients",
                self.label
            )));
        }
        Ok(())
    }
}

/// Everything the end-to-end pipeline produced, models plus selection trace.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    /// One model per input dataset, sharing one term list.
    pub models: Vec<CfmModel>,
    /// Candidate pool the pipeline started from.
    pub pool: Vec<TermSpec>,
    /// Pool terms that were linearly dependent in every dataset (for the
    /// standard three-level grids: the pure cubes).
    pub aliased_everywhere: Vec<TermSpec>,
    /// Terms surviving the significance filter (stage one).
    pub stage_one_survivors: Vec<TermSpec>,
    /// Removals performed by the elimination stage, in order.
    pub elimination_steps: Vec<EliminationStep>,
    /// Cheapest remaining removal score when elimination stopped.
    pub stopping_score: Option<f64>,
}

/// Runs the full selection pipeline over one or more datasets:
/// pool -> per-dataset OLS -> significance filter -> stepwise elimination ->
/// final per-dataset fits on the shared surviving terms.
pub fn fit_cfm3d(
    datasets: &[MeasurementSet],
    pool_degree: u32,
    alpha: f64,
    stop_threshold: f64,
) -> Result<PipelineOutcome> {
    if datasets.is_empty() {
        return Err(Error::Contract("no datasets supplied".into()));
    }
    let pool = term_pool(pool_degree)?;
    let stage_one_fits: Vec<OlsFit> = datasets
        .iter()
        .map(|set| fit_ols(set, &pool))
        .collect::<Result<_>>()?;
    let aliased_everywhere: Vec<TermSpec> = pool
        .iter()
        .copied()
        .filter(|&t| stage_one_fits.iter().all(|f| f.aliased.contains(&t)))
        .collect();
    let stage_one_survivors = p_value_filter(&stage_one_fits, alpha)?;
    let elimination = stepwise_eliminate(datasets, &stage_one_survivors, stop_threshold)?;
    let models = datasets
        .iter()
        .map(|set| {
            let fit = fit_ols(set, &elimination.surviving)?;
            CfmModel::from_fit(&set.label, &fit, set)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PipelineOutcome {
        models,
        pool,
        aliased_everywhere,
        stage_one_survivors,
        elimination_steps: elimination.steps,
        stopping_score: elimination.stopping_score,
    })
}

/// Fits the fixed distance-velocity model ln(F) = b0 + b1 d + b2 v + b3 d^2
/// on a single-height dataset.
pub fn fit_cfm2d(dataset: &MeasurementSet) -> Result<CfmModel> {
    if dataset.samples.len() < 4 {
        return Err(Error::Contract(format!(
            "distance-velocity fit needs >= 4 samples, got {}",
            dataset.samples.len()
        )));
    }
    let (h_min, h_max) = dataset.samples.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), s| (lo.min(s.height_m), hi.max(s.height_m)),
    );
    if h_max - h_min > SINGLE_HEIGHT_TOLERANCE_M {
        return Err(Error::Contract(format!(
            "distance-velocity fit requires a single height; dataset '{}' spans {:.6} m to {:.6} m",
            dataset.label, h_min, h_max
        )));
    }
    let terms = [
        TermSpec::INTERCEPT,
        TermSpec::new(1, 0, 0),
        TermSpec::new(0, 0, 1),
        TermSpec::new(2, 0, 0),
    ];
    let mut sorted = terms;
    sorted.sort();
    let fit = fit_ols(dataset, &sorted)?;
    CfmModel::from_fit(&dataset.label, &fit, dataset)
}

/// Serializes models as a pretty-printed JSON array with stable field order.
pub fn write_models<W: std::io::Write>(writer: &mut W, models: &[CfmModel]) -> Result<()> {
    for m in models {
        m.validate()?;
    }
    serde_json::to_writer_pretty(&mut *writer, models)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Reads models from JSON: either an array or a single model object.
pub fn read_models<R: std::io::Read>(reader: R) -> Result<Vec<CfmModel>> {
    let mut buf = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut buf)?;
    let models: Vec<CfmModel> = match serde_json::from_str::<Vec<CfmModel>>(&buf) {
        Ok(list) => list,
        Err(_) => {
            vec![serde_json::from_str::<CfmModel>(&buf)
                .map_err(|e| Error::Serialization(e.to_string()))?]
        }
    };
    for m in &models {
        m.validate()?;
    }
    if models.is_empty() {
        return Err(Error::Serialization("model file contains no models".into()));
    }
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{MeasurementSample, MeasurementSet};
    use approx::assert_relative_eq;

    fn single_height_set(h: f64) -> MeasurementSet {
        let mut samples = Vec::new();
        for &d in &[0.5, 0.6, 0.7, 0.8] {
            for &v in &[0.2, 0.3, 0.4] {
                // ln F = 5.5 - 1.2 d + 2.0 v + 0.4 d^2
                let ln_f = 5.5 - 1.2 * d + 2.0 * v + 0.4 * d * d;
                samples.push(MeasurementSample {
                    distance_m: d,
                    height_m: h,
                    velocity_mps: v,
                    force_n: ln_f.exp(),
                    repetition: 1,
                });
            }
        }
        MeasurementSet {
            label: "slice".into(),
            samples,
        }
    }

    #[test]
    fn cfm2d_exact_recovery() {
        let model = fit_cfm2d(&single_height_set(0.3)).unwrap();
        assert_eq!(model.terms.len(), 4);
        assert_relative_eq!(
            model.coefficient(TermSpec::INTERCEPT).unwrap(),
            5.5,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            model.coefficient(TermSpec::new(1, 0, 0)).unwrap(),
            -1.2,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            model.coefficient(TermSpec::new(0, 0, 1)).unwrap(),
            2.0,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            model.coefficient(TermSpec::new(2, 0, 0)).unwrap(),
            0.4,
            max_relative = 1e-9
        );
    }

    #[test]
    fn cfm2d_rejects_mixed_heights() {
        let mut set = single_height_set(0.3);
        set.samples.extend(single_height_set(0.4).samples);
        assert!(fit_cfm2d(&set).is_err());
    }

    #[test]
    fn model_serialization_round_trips() {
        let model = fit_cfm2d(&single_height_set(0.3)).unwrap();
        let mut buf = Vec::new();
        write_models(&mut buf, std::slice::from_ref(&model)).unwrap();
        let back = read_models(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].label, model.label);
        assert_eq!(back[0].terms, model.terms);
        // Bit-exact float round trip through JSON.
        assert_eq!(back[0].coefficients, model.coefficients);
        assert_eq!(
            back[0].diagnostics.as_ref().unwrap().p_values,
            model.diagnostics.as_ref().unwrap().p_values
        );
    }

    #[test]
    fn single_object_model_file_accepted() {
        let model = fit_cfm2d(&single_height_set(0.3)).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back = read_models(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 1);
    }

    #[test]
    fn pipeline_rejects_empty_dataset_list() {
        assert!(fit_cfm3d(&[], 3, 0.05, 0.5).is_err());
    }
}
