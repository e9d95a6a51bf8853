//! Error types shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Invalid argument (out-of-range index, bad dimension, non-positive
    /// parameter, malformed input file, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The input left the mathematical domain of an operation
    /// (σ_k < 0 where k-convexity was required, |Du| ≥ 1, z ≥ 1, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The graph stopped being strictly spacelike.
    #[error("spacelike violation: {0}")]
    Spacelike(String),

    /// An iterative procedure failed to reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Adaptive integration could not continue (step-size underflow).
    #[error("integration failure at r = {at}: {message}")]
    Integration { at: f64, message: String },

    /// The explicit/implicit time stepper exhausted its retry budget.
    #[error("stiffness failure: {0}")]
    Stiffness(String),

    /// The comparison sandwich u̲ + at ≤ u ≤ u̅ + at was violated beyond
    /// slack; this indicates a scheme defect, not a tolerance issue.
    #[error("comparison failure: {0}")]
    Comparison(String),

    /// A requested evaluation point lies outside the tabulated profile.
    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
