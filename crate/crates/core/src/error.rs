use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} is invalid: need an even number of samples, at least 8")]
    InvalidGrid(usize),

    #[error("field has {found} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("fields live on different grids ({left} vs {right} samples)")]
    GridMismatch { left: usize, right: usize },

    #[error("non-finite value {value} at sample {index}")]
    Corrupted { index: usize, value: f64 },

    #[error("derivative order {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedOrder(u32),

    #[error("input must have zero mean, found {0:e}")]
    NonZeroMean(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("{0} is only defined for lambda = {1}")]
    NotApplicable(&'static str, f64),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
