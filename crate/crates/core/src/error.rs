use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integrand is not finite at node {node} (argument {argument})")]
    NonFiniteIntegrand { node: f64, argument: f64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("logarithm of a non-positive inner expectation ({value})")]
    LogDomain { value: f64 },

    #[error("zeta must lie in (0, 1], got {0}")]
    BadZeta(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    BadDimension { expected: usize, got: usize },

    #[error("overlap increment Q_{{l+1}} - Q_l = {increment} is negative for species {species}")]
    NonmonotoneOverlap { species: usize, increment: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid 1RSB point: {0}")]
    BadPoint(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no 1RSB certificate found on the scan grid (largest gap {max_gap:e})")]
    CertificateNotFound { max_gap: f64 },
}
