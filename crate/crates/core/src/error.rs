use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input data.
    #[error("input error: {0}")]
    Input(String),

    /// Invalid arguments or option combinations.
    #[error("usage error: {0}")]
    Usage(String),

    /// A mathematically undefined request, e.g. a sample too short for the order.
    #[error("domain error: {0}")]
    Domain(String),

    /// A type-level precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed generator, source or plan specification.
    #[error("spec error: {0}")]
    Spec(String),

    #[error("external tool `{command}` failed: {message}")]
    ExternalTool { command: String, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
