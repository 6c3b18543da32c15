use thiserror::Error;

/// Errors surfaced by network construction, training, and checkpointing.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch in {context}: expected width {expected}, got {actual}")]
    Shape {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite loss at epoch {epoch}, batch {batch}; training aborted")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("invalid probability pair (p_fake={p_fake}, p_real={p_real}): {reason}")]
    Probability {
        p_fake: f64,
        p_real: f64,
        reason: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
