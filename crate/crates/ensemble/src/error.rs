use thiserror::Error;

use fakestack_backbones::BackboneError;
use fakestack_data::DataError;
use fakestack_metrics::MetricsError;
use fakestack_nn::NnError;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("{0}")]
    Argument(String),

    /// A member is missing a prediction for a post in the row basis.
    #[error("member {model:?} has no prediction for post {post_id:?}")]
    Completeness { model: String, post_id: String },

    /// A member produced more than one prediction for the same post.
    #[error("member {model:?} has duplicate predictions for post {post_id:?}")]
    Integrity { model: String, post_id: String },

    #[error("degenerate meta-training data: {0}")]
    DegenerateData(String),

    /// Prediction-time member order differs from the order frozen at
    /// meta-training time.
    #[error("member order mismatch: meta-learner was trained on {expected:?}, given {actual:?}")]
    Configuration {
        expected: Vec<String>,
        actual: Vec<String>,
    },

    /// A fold model failed to train, annotated with its position.
    #[error("training member {member:?} fold {fold}: {source}")]
    MemberTraining {
        member: String,
        fold: usize,
        source: BackboneError,
    },

    #[error(transparent)]
    Backbone(#[from] BackboneError),

    #[error(transparent)]
    Nn(#[from] NnError),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
