use thiserror::Error;

/// Errors raised by the laboratory's constructors and operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stored key underflow in round {round}: need {needed} bits, have {available}")]
    KeyUnderflow {
        round: u64,
        needed: u64,
        available: u64,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("target unreachable within search bounds (best total eps {best_eps:e})")]
    Unreachable { best_eps: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
