//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SublevelError {
    #[error("matrix is invalid: {0}")]
    InvalidMatrix(String),

    #[error("requested rank {requested} needs {needed} eigenpairs but only {available} are available")]
    RankTooLarge {
        requested: usize,
        needed: usize,
        available: usize,
    },

    #[error("spectrum is not positive definite (floor eigenvalue {floor:e}); use the truncated non-convex mode")]
    NotPositiveDefinite { floor: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coarse dimension {coarse} must satisfy 1 <= N < n = {fine}")]
    InvalidCoarseDim { coarse: usize, fine: usize },

    #[error("point outside objective domain: {0}")]
    DomainViolation(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("dense Hessian requested for n = {n} above cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("Hessian is singular")]
    SingularHessian,

    #[error("reduced Hessian is singular after resampling")]
    SingularReducedHessian,

    #[error("not a descent direction: g'd = {0:e} >= 0")]
    NotDescentDirection(f64),

    #[error("line search exhausted {0} backtracks without sufficient decrease")]
    LineSearchFailed(usize),

    #[error("decrement {lambda} outside applicable range: {reason}")]
    NotApplicable { lambda: f64, reason: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SublevelError>;

impl SublevelError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        SublevelError::Io {
            path: path.into(),
            source,
        }
    }
}
