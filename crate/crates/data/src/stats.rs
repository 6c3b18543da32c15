use serde::{Deserialize, Serialize};

use crate::{DatasetSplit, Label};

/// Per-split class counts and the mean whitespace-token count per post.
///
/// Word counts are taken over the raw, un-preprocessed text, split on maximal
/// whitespace runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub n_total: usize,
    pub n_real: usize,
    pub n_fake: usize,
    pub avg_words: f64,
}

/// Counts classes and averages whitespace-token counts. An empty split yields
/// all zeros.
pub fn compute_stats(split: &DatasetSplit) -> SplitStats {
    let mut n_real = 0usize;
    let mut n_fake = 0usize;
    let mut words = 0usize;
    for post in split {
        match post.label {
            Label::Real => n_real += 1,
            Label::Fake => n_fake += 1,
        }
        words += post.text.split_whitespace().count();
    }
    let n_total = split.len();
    let avg_words = if n_total == 0 {
        0.0
    } else {
        words as f64 / n_total as f64
    };
    SplitStats {
        n_total,
        n_real,
        n_fake,
        avg_words,
    }
}
