use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),
    #[error("bin index {bin} outside 1..={max}")]
    BinOutOfRange { bin: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("effective variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("symbol error rate is undefined for a Gaussian prior")]
    SerUndefined,
    #[error("message passing diverged at iteration {iteration}")]
    Diverged { iteration: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
