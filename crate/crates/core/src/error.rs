use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's preconditions (length or dimension mismatch, bad count).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("subprocess protocol error: {0}")]
    Protocol(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An input file or directory the operation depends on does not exist.
    #[error("missing input: {0}")]
    Missing(String),

    #[error("config hash mismatch: log has {logged}, config gives {given}")]
    HashMismatch { logged: String, given: String },

    #[error("malformed log {path}: {reason}")]
    MalformedLog { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
