use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The variants group into three coarse categories (see [`Error::category`])
/// which the command-line front end maps onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("phone not in inventory: {0}")]
    Inventory(String),
    #[error("word not in lexicon: {0}")]
    MissingWord(String),
    #[error("duplicate entry: {0}")]
    Duplicate(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("unknown symbol: {0}")]
    Symbol(String),
    #[error("hypothesis cap of {cap} expansions exceeded")]
    Resource { cap: usize },
    #[error("distribution provider failed for cues [{cues}]: {message}")]
    Provider { cues: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class, stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Data,
    Resource,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Resource { .. } => ErrorCategory::Resource,
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
