use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid cut-off: {0}")]
    InvalidCutoff(String),

    #[error("fractional order s = {0} must lie in (0, 1)")]
    InvalidOrder(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid function has no declared compact support")]
    MissingSupport,

    #[error("evaluation node {0} lies on the boundary of the grid box")]
    BoundaryEvaluation(usize),

    #[error("quadrature under-resolved: {0}")]
    UnderResolved(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("semigroup truncation indicator {indicator:.3e} exceeds threshold {threshold:.3e}")]
    Truncation { indicator: f64, threshold: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
