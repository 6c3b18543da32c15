//! Traditional neural baselines for the comparison harness: a bidirectional
//! recurrent model with additive attention, a multi-width 1-D convolutional
//! classifier, a hierarchical attention network, a recurrent-convolutional
//! network, and an attention-based multichannel CNN. All five train their
//! embeddings from scratch over a corpus-derived vocabulary and share the
//! fine-tuning contract of the transformer backbones, so the experiment
//! driver can swap either family into the same slots.

mod config;
mod error;
mod layers;
mod model;
mod train;
mod vocab;

pub use config::{BaselineConfig, BaselineKind, ALL_BASELINE_KINDS};
pub use error::BaselineError;
pub use model::{build_baseline, BaselineManifest, BaselineModel, EncodedPost, TensorSpec};
pub use train::{baseline_train_defaults, train_baseline, BASELINE_LR_DEFAULT};
pub use vocab::{build_vocab, Vocab, PAD_INDEX, PAD_TOKEN, UNK_INDEX, UNK_TOKEN};

pub use fakestack_backbones::{FineTuneEpoch, FineTuneHistory, TrainConfig};
pub use fakestack_nn::{ClassProbabilities, PredictionRecord};

pub type Result<T> = std::result::Result<T, BaselineError>;
