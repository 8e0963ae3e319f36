use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AncError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AncError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: String,
        expected: String,
        found: String,
    },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: String, index: usize },

    #[error("path {path}: direct-path delay of {delay} taps exceeds ir_length {ir_length}")]
    DelayExceedsLength {
        path: String,
        delay: usize,
        ir_length: usize,
    },

    #[error("{what} is singular or not positive definite; use a positive regularizer (delta/epsilon/mu > 0)")]
    Singular { what: String },

    #[error("constrained problem is infeasible: {0}")]
    Infeasible(String),

    #[error("controller diverged at step {step}: {reason} (last finite weight norm {last_norm:.6e})")]
    Divergence {
        step: usize,
        reason: String,
        last_norm: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl AncError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AncError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(
        what: impl Into<String>,
        expected: impl std::fmt::Display,
        found: impl std::fmt::Display,
    ) -> Self {
        AncError::Shape {
            what: what.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
