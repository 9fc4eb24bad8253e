use thiserror::Error;

/// Errors raised by bound computations and the verification harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("asymmetric distance: rho({a}, {b}) = {ab} but rho({b}, {a}) = {ba}")]
    AsymmetricDistance { a: usize, b: usize, ab: f64, ba: f64 },

    #[error("enumeration too large: {what} needs {needed} evaluations (limit {limit}); {hint}")]
    TooLarge {
        what: &'static str,
        needed: f64,
        limit: f64,
        hint: &'static str,
    },

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("rank-deficient design: smallest singular value {0:e}")]
    RankDeficient(f64),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
