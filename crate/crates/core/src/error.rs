use std::path::PathBuf;

/// A row that could not be parsed during ingestion.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RowError {
    /// 1-based line number in the source file (the header is line 1).
    pub line: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("non-finite log-likelihood contribution at index {index}")]
    NonFinite { index: usize },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{bad} of {total} rows could not be parsed")]
    TooManyBadRows {
        bad: usize,
        total: usize,
        rows: Vec<RowError>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Numerical failures (as opposed to bad user input) map to a distinct
    /// exit code in the command-line tool.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence(_) | Error::NonFinite { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
