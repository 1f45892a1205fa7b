use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the discretization, the solver and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh needs at least 2 elements, got {0}")]
    InvalidMesh(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error(
        "non-positive pivot {pivot:e} at row {row} (coefficient left the admissible set u >= eps?)"
    )]
    NonPositivePivot { row: usize, pivot: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data is constant (range {0:e}); cannot quantize")]
    ConstantData(f64),

    #[error("iteration {iteration}: {source}")]
    Step {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("iteration {iteration}: non-finite value in {what}")]
    NonFinite {
        iteration: usize,
        what: &'static str,
    },

    #[error(
        "iteration {iteration}: functional value {value:e} exceeds divergence bound {bound:e}"
    )]
    Diverged {
        iteration: usize,
        value: f64,
        bound: f64,
    },

    #[error("iteration {iteration}: step-size invariant violated: {what}")]
    Invariant { iteration: usize, what: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
