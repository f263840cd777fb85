use thiserror::Error;

/// Errors raised anywhere in the geometry / integral / embedding pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported basis: no STO-3G data for element {0}")]
    UnsupportedBasis(String),

    #[error("ill-conditioned basis: smallest overlap eigenvalue {0:.3e}")]
    IllConditioned(f64),

    #[error("SCF did not converge after {iterations} iterations (last residual {residual:.3e})")]
    ScfFailure { iterations: usize, residual: f64 },

    #[error("operator is not Hermitian: imaginary residue {0:.3e}")]
    NonHermitian(f64),

    #[error("qubit count {requested} exceeds the simulator cap of {cap}")]
    QubitCap { requested: usize, cap: usize },

    #[error("invalid fragment partition: {0}")]
    InvalidFragments(String),

    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),

    #[error("chemical potential did not converge: {0}")]
    DmetNonConvergence(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
