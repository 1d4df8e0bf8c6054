use thiserror::Error;

/// Errors raised by the record, distribution and simulation APIs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("dimension must be at least {required}, got {got}")]
    Dimension { required: u32, got: u32 },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("row {row} has {got} components, expected {expected}")]
    RowWidth {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid transition query: {0}")]
    InvalidQuery(String),

    #[error("truncation cap of {cap} terms reached before tolerance {tol:e} was met")]
    PolicyExhausted { cap: u64, tol: f64 },

    #[error("series not converged by k = {k_reached}: partial value {value} (error estimate {err_estimate:e})")]
    NotConverged {
        value: f64,
        err_estimate: f64,
        k_reached: u64,
    },

    #[error("quantile undefined at p = {0}")]
    QuantileUndefined(f64),
}

pub type Result<T> = std::result::Result<T, RecordError>;
