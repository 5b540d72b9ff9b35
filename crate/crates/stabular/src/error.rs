//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// CSV ingestion failures (bad cells, missing labels, absent columns).
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// A caller violated an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Fitting failed for a specific column; keeps the column name attached.
    #[error("fit error for column '{column}': {message}")]
    ColumnFit { column: String, message: String },

    /// Fitting failed for reasons not tied to a single column.
    #[error("fit error: {0}")]
    Fit(String),

    /// A metric is undefined for the given counts (e.g. a class absent).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Model/scheme file problems: bad schema, wrong version, truncation.
    #[error("model file error: {0}")]
    ModelFile(String),

    /// Report assembly or emission problems.
    #[error("report error: {0}")]
    Report(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn column_fit(column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ColumnFit {
            column: column.into(),
            message: message.into(),
        }
    }
}
