use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("singular diagonal operator: entry {index} has magnitude {magnitude:e}")]
    SingularDiagonal { index: usize, magnitude: f64 },

    #[error("matrix is singular to tolerance (condition indicator {condition_indicator:e})")]
    SingularMatrix { condition_indicator: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("channel set has M = {found} realizations but the design requires M = {required}")]
    DimensionBudget { required: usize, found: usize },

    #[error("degenerate construction: {what} has rank {rank}, required {required}")]
    Degenerate {
        what: String,
        rank: usize,
        required: usize,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors that come from numerics or construction rather than
    /// from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDiagonal { .. } | Error::SingularMatrix { .. } | Error::Degenerate { .. }
        )
    }
}
