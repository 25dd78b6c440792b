use thiserror::Error;

/// Errors raised by the quantum-state primitives and the marginal machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} failed to converge")]
    NoConvergence(&'static str),

    #[error("trace {0:e} is too close to zero to renormalize")]
    DegenerateTrace(f64),

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("trace is not one (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("marginals {first} and {second} disagree on their overlap (deviation {deviation:e})")]
    InconsistentMarginals { first: String, second: String, deviation: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
