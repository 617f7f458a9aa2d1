use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("regularization parameter must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("iteration budget exhausted; achieved relative residual {achieved:e}")]
    ConvergenceFailure { achieved: f64 },

    #[error("right-hand side is zero")]
    DegenerateRhs,

    #[error("Krylov space is exhausted; no further expansion possible")]
    KrylovExhausted,

    #[error("discrepancy target {target} is not attainable for rhs norm {rhs_norm}")]
    InfeasibleDiscrepancy { target: f64, rhs_norm: f64 },

    #[error("Jacobian system is numerically singular")]
    SingularJacobian,

    #[error("zero {kind} sum at index {index}")]
    ZeroSum { kind: &'static str, index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("image dimensions {width}x{height} do not match data length {len}")]
    ImageShape {
        width: usize,
        height: usize,
        len: usize,
    },
}
