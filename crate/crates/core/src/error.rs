use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("point is not on the simplex: {0}")]
    Infeasible(String),

    #[error("sampling distribution is degenerate (all weights zero after clipping)")]
    DegenerateDistribution,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("run finished without any productive iterate ({iterations} iterations)")]
    NoProductiveIterates { iterations: u64 },

    #[error("invariant violated at step {step}: {what}")]
    InvariantViolated { step: u64, what: String },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("no feasible grid point at resolution {resolution}")]
    NoFeasibleGridPoint { resolution: f64 },

    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
