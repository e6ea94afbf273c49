//! Shared fixtures for the integration tests: the three reference models
//! with frozen published coefficients, and grid builders spanning their
//! measured ranges.

use cfm_core::dataio::GridSpec;
use cfm_core::fitting::{CfmModel, DomainBox, TermSpec};

/// The nine-term basis every reference model uses, as exponent triples
/// (d, h, v). Order here is irrelevant; construction sorts canonically.
pub const NINE_TERM_EXPONENTS: [(u32, u32, u32); 9] = [
    (0, 0, 0),
    (0, 0, 1),
    (1, 0, 0),
    (2, 0, 0),
    (1, 1, 0),
    (0, 2, 0),
    (2, 0, 1),
    (1, 0, 2),
    (1, 2, 0),
];

/// The same nine terms in canonical model order.
pub fn nine_term_specs() -> Vec<TermSpec> {
    let mut terms: Vec<TermSpec> = NINE_TERM_EXPONENTS
        .iter()
        .map(|&(a, b, c)| TermSpec::new(a, b, c))
        .collect();
    terms.sort();
    terms
}

/// Builds a model from unsorted (exponents, coefficient) pairs; pairs are
/// sorted into canonical term order together.
pub fn model_from_parts(
    label: &str,
    pairs: &[((u32, u32, u32), f64)],
    distance_m: (f64, f64),
    height_m: (f64, f64),
    velocity_mps: (f64, f64),
) -> CfmModel {
    let mut pairs: Vec<(TermSpec, f64)> = pairs
        .iter()
        .map(|&((a, b, c), coeff)| (TermSpec::new(a, b, c), coeff))
        .collect();
    pairs.sort_by(|x, y| x.0.cmp(&y.0));
    let (terms, coefficients) = pairs.into_iter().unzip();
    let model = CfmModel {
        label: label.into(),
        terms,
        coefficients,
        diagnostics: None,
        domain: DomainBox {
            distance_m,
            height_m,
            velocity_mps,
        },
    };
    model.validate().expect("reference model is well formed");
    model
}

/// UR10e reference model; coefficients in the published order
/// (1, v, d, d^2, d*h, h^2, d^2*v, d*v^2, d*h^2).
pub fn ur10e() -> CfmModel {
    model_from_parts(
        "ur10e",
        &[
            ((0, 0, 0), 6.2990),
            ((0, 0, 1), 3.3761),
            ((1, 0, 0), -1.1050),
            ((2, 0, 0), -1.3066),
            ((1, 1, 0), -1.5258),
            ((0, 2, 0), -6.6954),
            ((2, 0, 1), 4.0919),
            ((1, 0, 2), -6.0090),
            ((1, 2, 0), 8.5207),
        ],
        (0.52, 0.88),
        (0.14, 0.46),
        (0.20, 0.40),
    )
}

/// KUKA reference model at the 30 Nm torque-limit setting.
pub fn kuka_30nm() -> CfmModel {
    model_from_parts(
        "kuka-30nm",
        &[
            ((0, 0, 0), 7.0641),
            ((0, 0, 1), 4.2943),
            ((1, 0, 0), -4.5286),
            ((2, 0, 0), 0.9917),
            ((1, 1, 0), -0.5795),
            ((0, 2, 0), -6.0074),
            ((2, 0, 1), 3.9366),
            ((1, 0, 2), -7.2169),
            ((1, 2, 0), 7.0446),
        ],
        (0.56, 0.86),
        (0.14, 0.46),
        (0.20, 0.40),
    )
}

/// KUKA reference model at the 10 Nm torque-limit setting.
pub fn kuka_10nm() -> CfmModel {
    model_from_parts(
        "kuka-10nm",
        &[
            ((0, 0, 0), 6.6936),
            ((0, 0, 1), 4.9297),
            ((1, 0, 0), -4.4782),
            ((2, 0, 0), 1.2926),
            ((1, 1, 0), -0.3758),
            ((0, 2, 0), -5.5669),
            ((2, 0, 1), 3.2609),
            ((1, 0, 2), -7.2332),
            ((1, 2, 0), 6.4016),
        ],
        (0.56, 0.86),
        (0.14, 0.46),
        (0.20, 0.40),
    )
}

pub fn reference_models() -> Vec<CfmModel> {
    vec![ur10e(), kuka_30nm(), kuka_10nm()]
}

/// Evenly spaced points including both endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && hi > lo);
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| (lo * (last - i as f64) + hi * i as f64) / last)
        .collect()
}

/// `steps`-per-axis grid spanning the model's measured ranges exactly.
pub fn domain_grid(model: &CfmModel, steps: usize) -> GridSpec {
    let d = model.domain.distance_m;
    let h = model.domain.height_m;
    let v = model.domain.velocity_mps;
    GridSpec::new(
        linspace(d.0, d.1, steps),
        linspace(h.0, h.1, steps),
        linspace(v.0, v.1, steps),
    )
    .expect("domain grid is valid")
}
