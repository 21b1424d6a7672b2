use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid interval ]{a}, {b}]: need a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("measure {0} has no analytic or recursive concentration rule; use the brute-force oracle")]
    OracleOnlyMeasure(String),

    #[error("measure assigns zero mass to [-{m}, {m}]")]
    ZeroMass { m: f64 },

    #[error("matrix of size {size} exceeds the dense cap {cap}; count eigenvalues by inertia instead")]
    DenseCapExceeded { size: usize, cap: usize },

    #[error("quadrature did not converge at maximum depth (residual estimate {residual:e})")]
    QuadratureDiverged { residual: f64 },

    #[error("numerical consistency check failed: {0}")]
    Consistency(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("measure grammar: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
