use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layout line {line}, column {column}: {message}")]
    Layout {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
    #[error("unknown monitor `{0}`")]
    UnknownMonitor(String),
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed table {path}: {message}")]
    Table { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn layout(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Layout {
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
