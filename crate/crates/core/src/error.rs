use thiserror::Error;

/// Errors raised while building models or running the dynamics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("initial state has zero norm")]
    ZeroNorm,

    #[error("initial state norm deviates from 1 by {deviation:e} (tolerance {tolerance:e})")]
    NotNormalized { deviation: f64, tolerance: f64 },

    #[error("step size dt={dt} too large: dt * max|frequency| = {product:.3} exceeds {limit}")]
    StepTooLarge { dt: f64, product: f64, limit: f64 },

    #[error("invalid time grid: {0}")]
    InvalidTimes(String),

    #[error("state became non-finite at t={0}")]
    Overflow(f64),

    #[error("dense oracle dimension {dim} exceeds the limit {limit}")]
    OracleTooLarge { dim: usize, limit: usize },

    #[error("time difference {0} lies outside the tabulated range")]
    OutOfRange(f64),

    #[error("model is not of spin-boson shape: {0}")]
    NotSpinBoson(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for failures that arise while integrating (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::StepTooLarge { .. } | Error::Overflow(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
