//! Error type shared by all modules of the crate.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the modulation chain, the detectors and the
/// simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An input slice or vector had the wrong length.
    #[error("input size mismatch: expected {expected}, got {got}")]
    InputSize { expected: usize, got: usize },

    /// Operands have incompatible dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value lies outside the domain the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration (bounds, ranges, unknown names).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An oracle or baseline refused an instance that is too large for
    /// exhaustive treatment.
    #[error("instance refused: {0}")]
    Refused(String),

    /// I/O failure, annotated with the path involved.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A persisted file or record could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A lower-level error annotated with where it happened.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap with a description of the operation that failed.
    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
