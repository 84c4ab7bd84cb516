use thiserror::Error;

use crate::feres::BranchId;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("angle {0} is singular (0 and π are excluded here)")]
    SingularAngle(f64),

    #[error("angle {value} lies outside [0, π]: {context}")]
    OutOfRange { value: f64, context: &'static str },

    #[error("invalid base angle: {0}")]
    InvalidBaseAngle(String),

    #[error("branch {branch} is not admissible at θ = {theta} (word index {index})")]
    Inadmissible {
        index: usize,
        branch: BranchId,
        theta: f64,
    },

    #[error("reachable set was truncated at depth {depth}; a complete set is required")]
    Truncated { depth: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("excluded input: {0}")]
    ExcludedInput(String),

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("quadrature did not converge: achieved {achieved:e}, wanted {wanted:e}")]
    Quadrature { achieved: f64, wanted: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("direction vector must be nonzero")]
    ZeroVector,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
