//! Hand-rolled feed-forward networks for the classification heads and the
//! stacking meta-learner.
//!
//! Everything is double precision and deterministic: parameter
//! initialization, dropout masks, batch shuffling, and optimizer state are
//! all driven by explicit seeds, so identical (config, seed, data) yields
//! bit-identical parameters in single-threaded use. Gradients are written by
//! hand per layer and verified against central finite differences rather
//! than relying on an autodiff framework.

mod activation;
mod checkpoint;
mod error;
mod ffnet;
mod gradcheck;
mod heads;
mod init;
mod optim;
mod probs;
mod train;

pub use activation::{gelu, gelu_prime, log_sum_exp, softmax_rows, Activation};
pub use checkpoint::{fingerprint, load_network, save_network, CheckpointManifest};
pub use error::NnError;
pub use ffnet::{FfLayer, GradBuffers, LayerGrads, NetworkParams, Norm};
pub use gradcheck::grad_check;
pub use heads::{
    build_meta_net, build_mlp_head, head_forward, meta_forward, MetaNetConfig, MlpHeadConfig,
    NormKind,
};
pub use init::{derive_seed, xavier_uniform};
pub use optim::{Optimizer, OptimizerKind};
pub use probs::{ClassProbabilities, PredictionRecord};
pub use train::{
    cross_entropy_grad, logit_accuracy, mean_cross_entropy, train_network, EpochStats,
    OptimizerChoice, TrainHistory, TrainSettings,
};

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, NnError>;
