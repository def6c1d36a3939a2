use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("l1 radius must be nonnegative, got {0}")]
    NegativeRadius(f64),

    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("row index {row} out of range for signal length {n}")]
    RowOutOfRange { row: usize, n: usize },

    #[error("transform {kind} cannot be built for length {n}: {reason}")]
    IncompatibleLength {
        kind: &'static str,
        n: usize,
        reason: &'static str,
    },

    #[error("source weights are identically zero")]
    ZeroWeights,

    #[error("point is outside the l1 ball: |x|_1 = {norm}, tau = {tau}")]
    Infeasible { norm: f64, tau: f64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("problem too large for dense oracle: dimension {dim} exceeds {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("ground truth is zero")]
    ZeroTruth,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
