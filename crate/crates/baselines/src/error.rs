use thiserror::Error;

/// Errors from the traditional-baseline models.
#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Train/validation id overlap detected before training.
    #[error("data leakage: {} post id(s) appear in both train and validation (first: {})",
            ids.len(), ids.first().map(String::as_str).unwrap_or("?"))]
    Leakage { ids: Vec<String> },

    #[error("training loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Backbone(#[from] fakestack_backbones::BackboneError),

    #[error(transparent)]
    Nn(#[from] fakestack_nn::NnError),

    #[error(transparent)]
    Metrics(#[from] fakestack_metrics::MetricsError),

    #[error(transparent)]
    Data(#[from] fakestack_data::DataError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
