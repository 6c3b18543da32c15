//! Stacked generalization over the member classifiers: assembles per-post
//! member probabilities into a meta-feature matrix, trains a meta-learner
//! (neural network, random forest, or SVM) on it, and produces the final
//! ensembled predictions. Out-of-fold generation keeps the meta-training
//! features leakage-free; the named variants fix the member compositions.

mod error;
mod matrix;
mod meta;
mod oof;
mod variant;

pub use error::EnsembleError;
pub use matrix::{build_meta_features, MetaFeatureMatrix};
pub use meta::{ensemble_predict, train_meta, MetaConfig, MetaKind, MetaLearner};
pub use oof::{
    generate_oof_predictions, MemberSpec, MetaSource, OofPredictions, OOF_DEFAULT_FOLDS,
};
pub use variant::{define_variant, EnsembleVariant, VariantName};

pub type Result<T> = std::result::Result<T, EnsembleError>;
