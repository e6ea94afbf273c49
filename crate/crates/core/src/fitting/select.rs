//! Two-stage term selection: a significance filter across datasets, then
//! iterative elimination of the term whose removal costs the least fit
//! quality.

use crate::dataio::MeasurementSet;
use crate::error::{Error, Result};
use crate::fitting::ols::{fit_ols, OlsFit};
use crate::fitting::terms::TermSpec;

/// Weight of the R^2 change against the newton-scale RMSE change in the
/// elimination score.
pub const R2_SCORE_WEIGHT: f64 = 100.0;

/// One removal performed by `stepwise_eliminate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminationStep {
    pub removed: TermSpec,
    /// Summed |dRMSE| + 100 |dR^2| over all datasets for this removal.
    pub score: f64,
}

/// Outcome of the elimination stage.
#[derive(Debug, Clone)]
pub struct EliminationOutcome {
    /// Terms that survived, in canonical order.
    pub surviving: Vec<TermSpec>,
    /// Removals in the order they happened.
    pub steps: Vec<EliminationStep>,
    /// Score of the cheapest remaining removal when the loop stopped, if any
    /// candidate was left.
    pub stopping_score: Option<f64>,
}

/// Keeps a term iff it is statistically significant (p <= alpha) in at least
/// one of the fits; the intercept is always kept. Terms that were aliased in
/// every fit have no p-value anywhere and are therefore removed.
pub fn p_value_filter(fits: &[OlsFit], alpha: f64) -> Result<Vec<TermSpec>> {
    if fits.is_empty() {
        return Err(Error::Contract("no fits supplied".into()));
    }
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(Error::Contract(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let reference = &fits[0].requested;
    for fit in &fits[1..] {
        if &fit.requested != reference {
            return Err(Error::Contract(
                "fits passed to the significance filter cover different term lists".into(),
            ));
        }
    }
    let surviving = reference
        .iter()
        .copied()
        .filter(|&term| {
            term.is_intercept()
                || fits
                    .iter()
                    .any(|fit| fit.p_value(term).is_some_and(|p| p <= alpha))
        })
        .collect();
    Ok(surviving)
}

/// Score of removing `candidate` from `current`, summed over datasets:
/// |dRMSE| + 100 |dR^2|, both measured on the force scale (newtons), where
/// the model's quality is reported.
fn removal_score(
    datasets: &[MeasurementSet],
    base: &[OlsFit],
    current: &[TermSpec],
    candidate: TermSpec,
) -> Result<f64> {
    let trial: Vec<TermSpec> = current.iter().copied().filter(|&t| t != candidate).collect();
    let mut score = 0.0;
    for (set, base_fit) in datasets.iter().zip(base) {
        let fit = fit_ols(set, &trial).map_err(|e| Error::EliminationRefit {
            term: candidate,
            source: Box::new(e),
        })?;
        score += (fit.rmse_force_n - base_fit.rmse_force_n).abs()
            + R2_SCORE_WEIGHT * (fit.r_squared_force - base_fit.r_squared_force).abs();
    }
    Ok(score)
}

/// Iteratively removes the term whose deletion changes the fits the least,
/// refitting every dataset each round, until the cheapest removal would cost
/// more than `stop_threshold`.
///
/// Ties on the score prefer removing the higher-degree term (simpler models
/// first), then the term later in canonical order; the procedure is fully
/// deterministic. The intercept is never a removal candidate.
pub fn stepwise_eliminate(
    datasets: &[MeasurementSet],
    terms: &[TermSpec],
    stop_threshold: f64,
) -> Result<EliminationOutcome> {
    if datasets.is_empty() {
        return Err(Error::Contract("no datasets supplied".into()));
    }
    if !terms.contains(&TermSpec::INTERCEPT) {
        return Err(Error::Contract(
            "elimination requires the intercept among the starting terms".into(),
        ));
    }
    if !stop_threshold.is_finite() || stop_threshold < 0.0 {
        return Err(Error::Contract(format!(
            "stop threshold must be finite and >= 0, got {stop_threshold}"
        )));
    }

    let mut current: Vec<TermSpec> = terms.to_vec();
    current.sort();
    let canonical_pos =
        |t: TermSpec| terms.iter().position(|&u| u == t).unwrap_or(usize::MAX);

    let mut steps = Vec::new();
    let mut stopping_score = None;
    loop {
        let base: Vec<OlsFit> = datasets
            .iter()
            .map(|set| fit_ols(set, &current))
            .collect::<Result<_>>()?;
        let candidates: Vec<TermSpec> = current
            .iter()
            .copied()
            .filter(|t| !t.is_intercept())
            .collect();
        if candidates.is_empty() {
            break;
        }
        let mut best: Option<(f64, TermSpec)> = None;
        for &candidate in &candidates {
            let score = removal_score(datasets, &base, &current, candidate)?;
            let better = match best {
                None => true,
                Some((best_score, best_term)) => {
                    score < best_score
                        || (score == best_score
                            && (candidate.degree() > best_term.degree()
                                || (candidate.degree() == best_term.degree()
                                    && canonical_pos(candidate) > canonical_pos(best_term))))
                }
            };
            if better {
                best = Some((score, candidate));
            }
        }
        let (score, term) = best.expect("candidates were non-empty");
        if score > stop_threshold {
            stopping_score = Some(score);
            break;
        }
        current.retain(|&t| t != term);
        steps.push(EliminationStep {
            removed: term,
            score,
        });
    }

    Ok(EliminationOutcome {
        surviving: current,
        steps,
        stopping_score,
    })
}
