//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Exhaustive simulation is capped at [`crate::circuit::MAX_INPUTS`] inputs.
    #[error("{0} inputs exceed the exhaustive simulation budget")]
    TooManyInputs(usize),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("parse error at token {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The feasible token set is empty; the caller is expected to backtrack.
    #[error("dead end: no feasible token")]
    DeadEnd,

    #[error("synthesis failed: {0}")]
    SynthesisFailure(String),

    #[error("non-finite gradient; optimizer step aborted")]
    NonFiniteGradient,

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    TextFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
