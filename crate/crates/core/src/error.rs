use thiserror::Error;

/// Errors raised by the numerical kernels, solvers and drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value in {stage} at index {index}")]
    NonFinite { stage: &'static str, index: usize },

    #[error("non-finite kernel entry during assembly at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel evaluated at its singular point")]
    SingularPoint,

    #[error("coincident nodes: denominator {denominator:e} below floor")]
    CoincidentNodes { denominator: f64 },

    #[error("right-hand side mean {mean:e} violates the zero-mean requirement")]
    MeanViolation { mean: f64 },

    #[error("linear solve stalled after {iterations} iterations, best residual {best_residual:e}")]
    SolverStall { iterations: usize, best_residual: f64 },

    #[error("problem size {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("data not smooth enough at x = {x}: second differences diverge")]
    InsufficientSmoothness { x: f64 },

    #[error("point ({x}, {y}) is not strictly inside the fluid domain")]
    NotInterior { x: f64, y: f64 },

    #[error("configurations do not match: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
