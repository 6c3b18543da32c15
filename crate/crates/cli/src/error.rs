use fakestack_backbones::BackboneError;
use fakestack_data::DataError;
use fakestack_ensemble::EnsembleError;
use fakestack_metrics::MetricsError;
use fakestack_nn::NnError;
use thiserror::Error;

/// Process-level failures, sorted by exit code: configuration 2, data 3,
/// training 4, coverage/integrity 5, anything else 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("training failure: {0}")]
    Training(String),

    #[error("coverage/integrity error: {0}")]
    Coverage(String),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Training(_) => 4,
            CliError::Coverage(_) => 5,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BackboneError> for CliError {
    fn from(e: BackboneError) -> Self {
        CliError::Training(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        CliError::Training(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match &e {
            MetricsError::Coverage { .. } => CliError::Coverage(e.to_string()),
            MetricsError::Argument(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::Completeness { .. } | EnsembleError::Integrity { .. } => {
                CliError::Coverage(e.to_string())
            }
            EnsembleError::MemberTraining { .. } | EnsembleError::Backbone(_) => {
                CliError::Training(e.to_string())
            }
            EnsembleError::Configuration { .. } | EnsembleError::Argument(_) => {
                CliError::Config(e.to_string())
            }
            EnsembleError::DegenerateData(_) => CliError::Data(e.to_string()),
            EnsembleError::Data(inner) => CliError::Data(inner.to_string()),
            EnsembleError::Metrics(inner) => inner.into(),
            EnsembleError::Nn(inner) => inner.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("json error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(format!("csv error: {e}"))
    }
}
