use thiserror::Error;

/// Crate-wide error type. Variants are coarse on purpose; the message carries
/// the detail callers actually need to report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what}: requested size {requested} exceeds cap {cap}")]
    SizeExceeded {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("cannot normalize the zero polynomial")]
    ZeroPolynomial,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver stalled: duality gap {gap:.3e} after {iterations} iterations")]
    SolverStalled { gap: f64, iterations: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
