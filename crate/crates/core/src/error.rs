use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the puzzle generation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} (space size {space}, limit {limit})")]
    Capacity { what: String, space: String, limit: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("checksum mismatch: {0}")]
    Checksum(String),

    #[error("stale permutation file: record bound to {expected}, set digest is {found}")]
    StalePermutation { expected: String, found: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn capacity(what: impl Into<String>, space: impl ToString, limit: impl ToString) -> Self {
        Error::Capacity { what: what.into(), space: space.to_string(), limit: limit.to_string() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
