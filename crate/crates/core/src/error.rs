use thiserror::Error;

/// Errors raised by the estimation and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("non-positive ordinate {value} at abscissa {abscissa}")]
    NonPositiveOrdinate { abscissa: f64, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: need at least {required} observations, got {actual}")]
    SeriesTooShort { required: usize, actual: usize },

    #[error("estimation failed: {0}")]
    EstimationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
