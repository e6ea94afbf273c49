//! Prediction-error reports, side-by-side model comparison, a per-height
//! two-variable ensemble baseline, and force-trace contact classification.

use crate::dataio::{MeasurementSample, MeasurementSet};
use crate::error::{Error, Result};
use crate::fitting::{fit_cfm2d, CfmModel, SINGLE_HEIGHT_TOLERANCE_M};
use crate::fmt::format_sig;
use crate::prediction::ForcePredictor;

/// A force rise of this much above the pre-impact baseline marks contact
/// onset (above the ~3 N transducer error).
pub const ONSET_THRESHOLD_N: f64 = 5.0;
/// Post-window forces within this band above the baseline count as
/// "diminished" (the robot bounced off).
pub const NOISE_FLOOR_N: f64 = 5.0;
/// Default transient-contact window after onset.
pub const DEFAULT_TRANSIENT_WINDOW_S: f64 = 0.5;

/// Under- and overestimation statistics of a predictor on a test set.
///
/// `max_ue_pct` and `max_ue_n` come from the same sample — the one with the
/// worst percentage — so they can be quoted together. The largest absolute
/// error in newtons may occur elsewhere and is reported separately as
/// `largest_ue_n`. Means are over the respective subset only (the
/// overestimated samples do not dilute the underestimation mean). The same
/// layout applies to the overestimation fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub max_ue_pct: f64,
    /// Newton error of the sample that sets `max_ue_pct`.
    pub max_ue_n: f64,
    pub mean_ue_pct: f64,
    pub mean_ue_n: f64,
    /// Largest underestimation in newtons over all samples.
    pub largest_ue_n: f64,
    pub max_oe_pct: f64,
    pub max_oe_n: f64,
    pub mean_oe_pct: f64,
    pub mean_oe_n: f64,
    pub largest_oe_n: f64,
    pub n_samples: usize,
    pub n_underestimates: usize,
    pub n_overestimates: usize,
}

impl ErrorReport {
    pub const CSV_HEADER: &'static str = "name,max_ue_pct,max_ue_n,mean_ue_pct,mean_ue_n,\
                                          max_oe_pct,max_oe_n,mean_oe_pct,mean_oe_n,\
                                          largest_ue_n,largest_oe_n,n_samples,n_underestimates,n_overestimates";

    pub fn csv_row(&self, name: &str) -> String {
        let sig = |x: f64| format_sig(x, 9);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            name,
            sig(self.max_ue_pct),
            sig(self.max_ue_n),
            sig(self.mean_ue_pct),
            sig(self.mean_ue_n),
            sig(self.max_oe_pct),
            sig(self.max_oe_n),
            sig(self.mean_oe_pct),
            sig(self.mean_oe_n),
            sig(self.largest_ue_n),
            sig(self.largest_oe_n),
            self.n_samples,
            self.n_underestimates,
            self.n_overestimates
        )
    }

    /// The eight headline metrics in presentation order.
    fn metrics(&self) -> [f64; 8] {
        [
            self.max_ue_pct,
            self.max_ue_n,
            self.mean_ue_pct,
            self.mean_ue_n,
            self.max_oe_pct,
            self.max_oe_n,
            self.mean_oe_pct,
            self.mean_oe_n,
        ]
    }
}

/// Running statistics of one error subset (under- or overestimates).
#[derive(Default)]
struct SubsetStats {
    max_pct: f64,
    paired_n: f64,
    sum_pct: f64,
    sum_n: f64,
    largest_n: f64,
    count: usize,
}

impl SubsetStats {
    fn push(&mut self, pct: f64, newtons: f64) {
        if pct > self.max_pct {
            self.max_pct = pct;
            self.paired_n = newtons;
        }
        self.largest_n = self.largest_n.max(newtons);
        self.sum_pct += pct;
        self.sum_n += newtons;
        self.count += 1;
    }

    fn means(&self) -> (f64, f64) {
        if self.count == 0 {
            (0.0, 0.0)
        } else {
            (
                self.sum_pct / self.count as f64,
                self.sum_n / self.count as f64,
            )
        }
    }
}

/// Evaluates the predictor on every sample and splits the errors into
/// underestimates (predicted < measured) and overestimates.
pub fn estimation_errors<P>(predictor: &P, test: &MeasurementSet) -> Result<ErrorReport>
where
    P: ForcePredictor + ?Sized,
{
    if test.samples.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no samples to evaluate in '{}'",
            test.label
        )));
    }
    let mut ue = SubsetStats::default();
    let mut oe = SubsetStats::default();
    for s in &test.samples {
        let predicted = predictor.predict_force_n(s.distance_m, s.height_m, s.velocity_mps)?;
        if !predicted.is_finite() {
            return Err(Error::Numerical(format!(
                "prediction at ({}, {}, {}) is not finite",
                s.distance_m, s.height_m, s.velocity_mps
            )));
        }
        let err = predicted - s.force_n;
        let pct = 100.0 * err.abs() / s.force_n;
        if err < 0.0 {
            ue.push(pct, -err);
        } else if err > 0.0 {
            oe.push(pct, err);
        }
    }
    let (mean_ue_pct, mean_ue_n) = ue.means();
    let (mean_oe_pct, mean_oe_n) = oe.means();
    Ok(ErrorReport {
        max_ue_pct: ue.max_pct,
        max_ue_n: ue.paired_n,
        mean_ue_pct,
        mean_ue_n,
        largest_ue_n: ue.largest_n,
        max_oe_pct: oe.max_pct,
        max_oe_n: oe.paired_n,
        mean_oe_pct,
        mean_oe_n,
        largest_oe_n: oe.largest_n,
        n_samples: test.samples.len(),
        n_underestimates: ue.count,
        n_overestimates: oe.count,
    })
}

/// Per-metric "worse than the reference predictor" flags, one per headline
/// metric of [`ErrorReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WorseFlags {
    pub max_ue_pct: bool,
    pub max_ue_n: bool,
    pub mean_ue_pct: bool,
    pub mean_ue_n: bool,
    pub max_oe_pct: bool,
    pub max_oe_n: bool,
    pub mean_oe_pct: bool,
    pub mean_oe_n: bool,
}

impl WorseFlags {
    fn against(report: &ErrorReport, reference: &ErrorReport) -> Self {
        let r = report.metrics();
        let base = reference.metrics();
        let worse = |i: usize| r[i] > base[i];
        Self {
            max_ue_pct: worse(0),
            max_ue_n: worse(1),
            mean_ue_pct: worse(2),
            mean_ue_n: worse(3),
            max_oe_pct: worse(4),
            max_oe_n: worse(5),
            mean_oe_pct: worse(6),
            mean_oe_n: worse(7),
        }
    }

    pub fn any(&self) -> bool {
        self.as_array().iter().any(|&b| b)
    }

    pub fn as_array(&self) -> [bool; 8] {
        [
            self.max_ue_pct,
            self.max_ue_n,
            self.mean_ue_pct,
            self.mean_ue_n,
            self.max_oe_pct,
            self.max_oe_n,
            self.mean_oe_pct,
            self.mean_oe_n,
        ]
    }
}

/// One line of a model comparison.
#[derive(Debug, Clone)]
pub struct ComparisonEntry {
    pub name: String,
    pub report: ErrorReport,
    /// Metrics on which this predictor is strictly worse than entry 0.
    pub worse: WorseFlags,
}

/// Runs [`estimation_errors`] for every named predictor on the same test
/// set. The first predictor is the reference; every other entry is flagged
/// per metric when strictly worse than it.
pub fn compare_models(
    predictors: &[(&str, &dyn ForcePredictor)],
    test: &MeasurementSet,
) -> Result<Vec<ComparisonEntry>> {
    if predictors.is_empty() {
        return Err(Error::Contract("no predictors to compare".into()));
    }
    let reports: Vec<ErrorReport> = predictors
        .iter()
        .map(|(_, p)| estimation_errors(*p, test))
        .collect::<Result<_>>()?;
    let reference = reports[0];
    Ok(predictors
        .iter()
        .zip(reports)
        .enumerate()
        .map(|(i, ((name, _), report))| ComparisonEntry {
            name: (*name).to_string(),
            report,
            worse: if i == 0 {
                WorseFlags::default()
            } else {
                WorseFlags::against(&report, &reference)
            },
        })
        .collect())
}

/// Aligned text table of a comparison; metrics flagged worse than the
/// reference are marked with `<`.
pub fn comparison_table_text(entries: &[ComparisonEntry]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>16} {:>16} {:>16} {:>16} {:>6}\n",
        "predictor", "max UE % (N)", "mean UE % (N)", "max OE % (N)", "mean OE % (N)", "n"
    ));
    for e in entries {
        let r = &e.report;
        let pair = |pct: f64, newtons: f64, worse: bool| {
            let mark = if worse { "<" } else { "" };
            format!("{:.2} ({:.2}){}", pct, newtons, mark)
        };
        out.push_str(&format!(
            "{:<16} {:>16} {:>16} {:>16} {:>16} {:>6}\n",
            e.name,
            pair(r.max_ue_pct, r.max_ue_n, e.worse.max_ue_pct || e.worse.max_ue_n),
            pair(r.mean_ue_pct, r.mean_ue_n, e.worse.mean_ue_pct || e.worse.mean_ue_n),
            pair(r.max_oe_pct, r.max_oe_n, e.worse.max_oe_pct || e.worse.max_oe_n),
            pair(r.mean_oe_pct, r.mean_oe_n, e.worse.mean_oe_pct || e.worse.mean_oe_n),
            r.n_samples
        ));
    }
    out
}

/// CSV of a comparison, one row per predictor.
pub fn comparison_table_csv(entries: &[ComparisonEntry]) -> String {
    let mut out = String::from(ErrorReport::CSV_HEADER);
    out.push('\n');
    for e in entries {
        out.push_str(&e.report.csv_row(&e.name));
        out.push('\n');
    }
    out
}

/// A bank of height-sliced two-variable models (force from distance and
/// velocity only), one per distinct height in the training data. Queries
/// dispatch to the model of the nearest height.
#[derive(Debug, Clone)]
pub struct PerHeightEnsemble {
    /// (height, model) pairs, ascending in height.
    models: Vec<(f64, CfmModel)>,
}

impl PerHeightEnsemble {
    /// Groups the training set by height (within the single-height
    /// tolerance) and fits one 2D model per group.
    pub fn fit(training: &MeasurementSet) -> Result<Self> {
        if training.samples.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "no samples to fit in '{}'",
                training.label
            )));
        }
        let mut groups: Vec<(f64, Vec<MeasurementSample>)> = Vec::new();
        for &s in &training.samples {
            match groups
                .iter_mut()
                .find(|(h, _)| (s.height_m - *h).abs() <= SINGLE_HEIGHT_TOLERANCE_M)
            {
                Some((_, list)) => list.push(s),
                None => groups.push((s.height_m, vec![s])),
            }
        }
        groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut models = Vec::with_capacity(groups.len());
        for (height, samples) in groups {
            let slice = MeasurementSet {
                label: format!("{}@h{height}", training.label),
                samples,
            };
            models.push((height, fit_cfm2d(&slice)?));
        }
        Ok(Self { models })
    }

    pub fn heights(&self) -> Vec<f64> {
        self.models.iter().map(|(h, _)| *h).collect()
    }

    pub fn models(&self) -> &[(f64, CfmModel)] {
        &self.models
    }

    fn nearest(&self, height_m: f64) -> &CfmModel {
        let (_, model) = self
            .models
            .iter()
            .min_by(|a, b| {
                let da = (a.0 - height_m).abs();
                let db = (b.0 - height_m).abs();
                da.partial_cmp(&db).unwrap()
            })
            .expect("ensemble is never empty");
        model
    }
}

impl ForcePredictor for PerHeightEnsemble {
    fn predict_force_n(&self, distance_m: f64, height_m: f64, velocity_mps: f64) -> Result<f64> {
        let model = self.nearest(height_m);
        Ok(model
            .linear_predictor(distance_m, height_m, velocity_mps)
            .exp())
    }
}

/// A sampled contact-force history.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTrace {
    pub timestamps_s: Vec<f64>,
    pub forces_n: Vec<f64>,
}

impl ForceTrace {
    pub fn new(timestamps_s: Vec<f64>, forces_n: Vec<f64>) -> Result<Self> {
        let trace = Self {
            timestamps_s,
            forces_n,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timestamps_s.len() != self.forces_n.len() {
            return Err(Error::BadTrace(format!(
                "{} timestamps vs {} force samples",
                self.timestamps_s.len(),
                self.forces_n.len()
            )));
        }
        if self.timestamps_s.len() < 2 {
            return Err(Error::BadTrace("trace needs at least 2 samples".into()));
        }
        if !self.timestamps_s.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::BadTrace(
                "timestamps must be strictly increasing".into(),
            ));
        }
        if !self
            .timestamps_s
            .iter()
            .chain(&self.forces_n)
            .all(|x| x.is_finite())
        {
            return Err(Error::BadTrace("trace values must be finite".into()));
        }
        Ok(())
    }
}

/// Whether a contact stays (transient) or keeps pressing (quasi-static).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactType {
    /// Force diminishes after the window: the robot bounced back.
    Transient,
    /// Force persists after the window: clamping contact.
    QuasiStatic,
}

/// Outcome of [`classify_contact`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactAssessment {
    pub contact_type: ContactType,
    /// Peak within the window respects the transient limit, and for
    /// quasi-static contacts the sustained force respects the lower limit.
    pub compliant: bool,
    pub onset_time_s: f64,
    /// Pre-impact force level (first sample).
    pub baseline_n: f64,
    /// Highest force from onset through the end of the window.
    pub peak_n: f64,
    /// Highest force from the end of the window onward.
    pub sustained_n: f64,
}

/// Classifies a contact trace against the two-tier force limits: a higher
/// limit inside the transient window after onset, a lower one for whatever
/// persists beyond it.
///
/// Onset is the first sample rising [`ONSET_THRESHOLD_N`] above the
/// baseline; "diminished" means staying within [`NOISE_FLOOR_N`] of the
/// baseline after the window.
pub fn classify_contact(
    trace: &ForceTrace,
    transient_window_s: f64,
    quasi_static_limit_n: f64,
    transient_limit_n: f64,
) -> Result<ContactAssessment> {
    trace.validate()?;
    for (name, value) in [
        ("transient window", transient_window_s),
        ("quasi-static limit", quasi_static_limit_n),
        ("transient limit", transient_limit_n),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Contract(format!(
                "{name} must be finite and > 0, got {value}"
            )));
        }
    }
    let baseline_n = trace.forces_n[0];
    let onset_index = trace
        .forces_n
        .iter()
        .position(|&f| f >= baseline_n + ONSET_THRESHOLD_N)
        .ok_or_else(|| {
            Error::BadTrace(format!(
                "no impact onset: no sample rises {ONSET_THRESHOLD_N} N above the {baseline_n} N baseline"
            ))
        })?;
    let onset_time_s = trace.timestamps_s[onset_index];
    let window_end_s = onset_time_s + transient_window_s;
    if *trace.timestamps_s.last().unwrap() < window_end_s {
        return Err(Error::BadTrace(format!(
            "trace ends {} s after onset, shorter than the {} s window",
            trace.timestamps_s.last().unwrap() - onset_time_s,
            transient_window_s
        )));
    }
    let mut peak_n = f64::NEG_INFINITY;
    let mut sustained_n = f64::NEG_INFINITY;
    for (&t, &f) in trace.timestamps_s.iter().zip(&trace.forces_n) {
        if t >= onset_time_s && t <= window_end_s {
            peak_n = peak_n.max(f);
        }
        if t >= window_end_s {
            sustained_n = sustained_n.max(f);
        }
    }
    let contact_type = if sustained_n <= baseline_n + NOISE_FLOOR_N {
        ContactType::Transient
    } else {
        ContactType::QuasiStatic
    };
    let compliant = peak_n <= transient_limit_n
        && (contact_type == ContactType::Transient || sustained_n <= quasi_static_limit_n);
    Ok(ContactAssessment {
        contact_type,
        compliant,
        onset_time_s,
        baseline_n,
        peak_n,
        sustained_n,
    })
}
