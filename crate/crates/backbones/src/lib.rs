//! Transformer backbones with classification heads.
//!
//! The crate covers the per-model half of the system: a fixed registry of
//! eight backbone families, deterministic hashing tokenizers, a compact
//! pre-norm transformer encoder with exact manual gradients, pooled sentence
//! embeddings, joint fine-tuning of encoder + MLP head, classic heads (SVM /
//! decision tree / random forest) over frozen features, and a filesystem
//! weights provider with a provider-native checkpoint container.
//!
//! Width notes: every family reports a 768-wide hidden state at base size;
//! the `small-proxy` size class swaps in a miniature encoder with the same
//! tokenizer conventions so the full pipeline can run on a desk machine.

mod classic;
mod encoder;
mod error;
mod finetune;
mod model;
mod provider;
mod registry;
mod tokenizer;

pub use classic::{
    train_classic_head, train_random_forest, ClassicHeadModel, ClassicKind, DecisionTreeModel,
    Kernel, RandomForestModel, SvmModel, FOREST_DEFAULT_TREES,
};
pub use encoder::{
    pool, pool_backward, BlockGrads, EncoderBlock, EncoderConfig, EncoderGrads, EncoderParams,
    SequenceCache, LN_EPS,
};
pub use error::BackboneError;
pub use finetune::{fine_tune, FineTuneEpoch, FineTuneHistory, TrainConfig, LR_MAX, LR_MIN};
pub use model::{encode_batch, EncodeDiagnostics, ModelManifest, TrainedBaseModel};
pub use provider::{
    load_pretrained, save_pretrained, FsProvider, PretrainedBackbone, PretrainedManifest,
    ProxySpec, ProxyTable, WeightsProvider, PROXIES_ENV, WEIGHTS_DIR_ENV,
};
pub use registry::{
    base_hidden_width, default_pooling, registry, registry_with, BackboneId, BackboneName,
    Pooling, SizeClass,
};
pub use tokenizer::{
    pad_batch, TokenizedPost, TokenizerSpec, CLS_ID, EOS_ID, FIRST_WORD_ID, PAD_ID,
};

// Shared prediction shapes come from the network crate so every model kind
// emits the same record type.
pub use fakestack_nn::{ClassProbabilities, MlpHeadConfig, PredictionRecord};

pub type Result<T> = std::result::Result<T, BackboneError>;
