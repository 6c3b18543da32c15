//! Config-driven orchestration of the full classification pipeline: parse a
//! strict TOML experiment description, run data preparation → member
//! fine-tuning → prediction caching → meta-feature assembly → meta-learner
//! training → evaluation, and persist everything (checkpoints, prediction
//! CSVs, reports, a stage-by-stage manifest) under one run directory.
//!
//! Every stage is resumable: its inputs are content-fingerprinted and the
//! stage is skipped when the fingerprint matches and its artifacts exist.

mod cache;
mod compare;
mod config;
mod error;
mod manifest;
mod pipeline;

pub use cache::{cache_predictions, load_predictions};
pub use compare::compare_runs;
pub use config::{
    load_config, validate_config, CliOverrides, DataSection, EnsembleSection, ExperimentConfig,
    MetaSection, TrainOverride, TrainSection, DEFAULT_VARIANT,
};
pub use error::CliError;
pub use manifest::{DataBlock, MemberRecord, RunManifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use pipeline::{run_experiment, Pipeline, SplitKey};

pub type Result<T> = std::result::Result<T, CliError>;
