use thiserror::Error;

/// Errors raised by the simulation and estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("circulant embedding is not nonnegative: min eigenvalue {min} vs max {max}")]
    NumericalEmbedding { min: f64, max: f64 },

    #[error("expected {expected:.0} points exceeds the configured cap of {cap}")]
    Capacity { expected: f64, cap: usize },

    #[error("quadrature oracle failed: {0}")]
    OracleFailure(String),

    #[error("moment of order {q} diverges for this model")]
    MomentDivergence { q: f64 },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("cannot normalize an ensemble of {0} replicate(s)")]
    CannotNormalize(usize),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => {
        return Err($crate::error::Error::Domain(format!($($arg)*)))
    };
}

macro_rules! usage {
    ($($arg:tt)*) => {
        return Err($crate::error::Error::Usage(format!($($arg)*)))
    };
}

pub(crate) use domain;
pub(crate) use usage;
