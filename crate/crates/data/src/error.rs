use thiserror::Error;

/// Errors produced while loading, validating or partitioning datasets.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error in {path}: missing columns {missing:?}, unexpected columns {extra:?}")]
    Schema {
        path: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("integrity error: duplicate id {id:?} (row {row})")]
    DuplicateId { id: String, row: usize },

    #[error("value error at row {row}: unknown label {value:?}")]
    UnknownLabel { row: usize, value: String },

    #[error("value error at row {row}: empty text")]
    EmptyText { row: usize },

    #[error("value error: unmapped verdict label(s) {labels:?}")]
    UnmappedVerdict { labels: Vec<String> },

    #[error("column {name:?} not found in {path}")]
    MissingColumn { name: String, path: String },

    #[error("argument error: k={k} out of range for split of size {n} (need 2 <= k <= n)")]
    KfoldArgument { k: usize, n: usize },

    #[error("integrity error: id {id:?} still collides after namespacing with {tag:?}")]
    NamespaceCollision { id: String, tag: String },

    #[error("malformed verdict mapping at line {line}: {message}")]
    BadVerdictMap { line: usize, message: String },
}
