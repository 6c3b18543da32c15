use thiserror::Error;

/// Errors surfaced by metric computation.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(
        "predictions do not cover the gold ids (missing: {missing:?}, extra or duplicated: {extra:?})"
    )]
    Coverage {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),
}
