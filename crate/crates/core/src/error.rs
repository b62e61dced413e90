use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error in field `{field}` at line {line}: {message}")]
    Schema {
        field: String,
        line: usize,
        message: String,
    },

    #[error("invalid value for `{field}`: {value} ({reason})")]
    Validation {
        field: String,
        value: String,
        reason: String,
    },

    #[error("invalid argument `{name}`: {reason}")]
    Argument { name: &'static str, reason: String },

    #[error("allocation uses zero power; cannot rescale to the budget")]
    DegenerateAllocation,

    #[error("non-finite value in {stage} at iteration {iteration}")]
    Numerical { stage: &'static str, iteration: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
