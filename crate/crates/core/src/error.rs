//! Crate-wide error type.

use crate::fitting::TermSpec;

/// Errors produced by any toolkit operation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A CSV row could not be parsed. `line` is the 1-based line number in the input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// An input or intermediate dataset contains no samples.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// A sample violates the measurement invariants (positive d, h, v, F; repetition >= 1).
    #[error("invalid sample at line {line}: {message}")]
    InvalidSample { line: u64, message: String },

    /// A caller-supplied argument violates an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Fewer samples than independent regression columns.
    #[error("underdetermined fit: {n_samples} samples for {n_terms} independent terms")]
    Underdetermined { n_samples: usize, n_terms: usize },

    /// A term-elimination refit failed.
    #[error("elimination refit without term {term} failed: {source}")]
    EliminationRefit {
        term: TermSpec,
        #[source]
        source: Box<Error>,
    },

    /// The force limit is violated already in the zero-velocity limit.
    #[error(
        "infeasible query: margin-scaled prediction exceeds {force_limit_n} N even as v -> 0 \
         at (d={distance_m} m, h={height_m} m)"
    )]
    Infeasible {
        distance_m: f64,
        height_m: f64,
        force_limit_n: f64,
    },

    /// The model has no velocity dependence, so no speed can enforce a force limit.
    #[error("model is velocity-independent at (d={distance_m} m, h={height_m} m); cannot solve for a speed")]
    VelocityIndependent { distance_m: f64, height_m: f64 },

    /// An inverse-kinematics target lies outside the reachable annulus.
    #[error("unreachable target: wrist point misses the reachable annulus by {deficit_m} m")]
    Unreachable { deficit_m: f64 },

    /// A force trace is too short or has no detectable impact onset.
    #[error("unusable force trace: {0}")]
    BadTrace(String),

    /// Numerical failure (singular matrix, non-finite intermediate).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Model/arm (de)serialization failure.
    #[error("serialization error: {0}")]
    Serialization(String),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
