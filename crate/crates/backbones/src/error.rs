use fakestack_data::DataError;
use fakestack_metrics::MetricsError;
use fakestack_nn::NnError;
use thiserror::Error;

/// Errors produced while resolving, encoding with, fine-tuning, or
/// checkpointing backbone models.
#[derive(Debug, Error)]
pub enum BackboneError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unknown backbone '{0}' (expected one of bert, gpt2, xlnet, roberta, distilroberta, albert, bart, deberta)")]
    UnknownBackbone(String),

    #[error("backbone '{backbone}' is not available: {reason}")]
    Availability { backbone: String, reason: String },

    #[error("train/validation leakage: {} post id(s) appear in both splits (first few: {})",
        ids.len(),
        ids.iter().take(5).cloned().collect::<Vec<_>>().join(", "))]
    Leakage { ids: Vec<String> },

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}; training aborted")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Nn(#[from] NnError),

    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("TOML error: {0}")]
    Toml(#[from] toml::de::Error),
}
