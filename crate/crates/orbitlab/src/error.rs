use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("sampling aliasing: {0}")]
    Aliasing(String),
    #[error("numerical differentiation failed: {0}")]
    Differentiation(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("requested accuracy not reached: {0}")]
    Accuracy(String),
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("Hecke relation failed at (m, n) = ({m}, {n}): residual {residual:e}")]
    Hecke { m: u32, n: u32, residual: f64 },
    #[error("automorphy check failed at sample {index}: residual {residual:e}")]
    Automorphy { index: usize, residual: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
