//! Dataset handling for the fake-news classification pipeline.
//!
//! Covers loading and validating the competition-format CSV/TSV splits,
//! adapting the external fact-check export to the binary label scheme,
//! text preprocessing, split merging, per-split statistics, and
//! stratified k-fold partitioning.
//!
//! All operations here are pure or read-only over immutable inputs and can
//! be called concurrently.

mod error;
mod fakecovid;
mod io;
mod kfold;
mod merge;
mod preprocess;
mod stats;
pub mod synth;
mod types;

pub use error::DataError;
pub use fakecovid::{adapt_fakecovid, AdaptOutcome, FakeCovidOptions, VerdictMap};
pub use io::{load_split, save_split, FormatHint};
pub use kfold::kfold_partition;
pub use merge::merge_splits;
pub use preprocess::{preprocess_text, PreprocessOptions};
pub use stats::{compute_stats, SplitStats};
pub use types::{DatasetSplit, Label, LabeledPost, SplitName};

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, DataError>;
