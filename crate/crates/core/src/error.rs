use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the toolkit.
///
/// Callers that need to map failures onto process exit codes should use
/// [`Error::class`] rather than matching on variants, since batch and
/// wrapped errors carry their cause inside.
#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition of an operation was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A remote endpoint could not be reached or answered with an error.
    #[error("transport error: {message}")]
    Transport { message: String, retriable: bool },

    /// Input data did not have the expected shape.
    #[error("{}:{line}: {message}", source_name.as_deref().unwrap_or("<input>"))]
    Format {
        source_name: Option<String>,
        line: usize,
        message: String,
    },

    /// An item of a batch failed; `index` is its position in the batch.
    #[error("batch item {index}: {source}")]
    BatchItem {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class, used for exit codes and retry decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Contract,
    Transport,
    Data,
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn transport(msg: impl Into<String>, retriable: bool) -> Self {
        Error::Transport {
            message: msg.into(),
            retriable,
        }
    }

    pub fn format(source_name: Option<&str>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.map(str::to_owned),
            line,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Contract(_) => ErrorClass::Contract,
            Error::Transport { .. } => ErrorClass::Transport,
            Error::BatchItem { source, .. } => source.class(),
            Error::Format { .. } | Error::Io { .. } | Error::Json(_) => ErrorClass::Data,
        }
    }

    /// Whether retrying the same request may succeed.
    pub fn is_retriable(&self) -> bool {
        match self {
            Error::Transport { retriable, .. } => *retriable,
            Error::BatchItem { source, .. } => source.is_retriable(),
            _ => false,
        }
    }
}
