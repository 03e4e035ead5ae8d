use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the localization library.
///
/// `Usage` and `Config` map to exit code 1 in the CLI, the data-shaped
/// variants map to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot ingest {path}: {reason}")]
    Ingest { path: PathBuf, reason: String },

    #[error("malformed report {record}: {reason}")]
    MalformedReport { record: String, reason: String },

    #[error("index load failed: {0}")]
    IndexLoad(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
