use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("observation {index} (column {column}) is zero; log(y^2) is undefined")]
    ZeroObservation { index: usize, column: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("update {update} failed: precision lost positive definiteness after {retries} step halvings")]
    UpdateFailed { update: usize, retries: usize },

    #[error("non-finite gradient at theta = {theta:?}")]
    NonFiniteGradient { theta: Vec<f64> },

    #[error("state transition is not stationary (spectral radius {0} >= 1)")]
    NotStationary(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
