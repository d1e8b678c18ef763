use thiserror::Error;

/// Failures raised by the estimators, the basis expansion and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("design matrix is numerically rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("the least squares estimator needs the known covariate mean (mu)")]
    MissingMu,

    #[error("invalid argument: {0}")]
    InvalidArgs(String),

    #[error("augmented dimension {augmented} exceeds n - 2 = {limit}")]
    DimensionOverflow { augmented: usize, limit: usize },

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
