use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("matrix is indefinite (eigenvalue {eigenvalue:e})")]
    Indefinite { eigenvalue: f64 },

    #[error("matrix is not orthonormal (Gram defect {defect:e})")]
    NotOrthonormal { defect: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("trace does not support this audit: {0}")]
    Trace(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
