//! Baseline model kinds and their architecture hyperparameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{BaselineError, Result};

/// The five traditional comparison architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    BilstmAttn,
    Cnn1d,
    Han,
    Rcnn,
    Amcnn,
}

pub const ALL_BASELINE_KINDS: [BaselineKind; 5] = [
    BaselineKind::BilstmAttn,
    BaselineKind::Cnn1d,
    BaselineKind::Han,
    BaselineKind::Rcnn,
    BaselineKind::Amcnn,
];

impl BaselineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineKind::BilstmAttn => "bilstm_attn",
            BaselineKind::Cnn1d => "cnn1d",
            BaselineKind::Han => "han",
            BaselineKind::Rcnn => "rcnn",
            BaselineKind::Amcnn => "amcnn",
        }
    }

    /// Whether the architecture contains convolution banks (and therefore
    /// requires the filter fields).
    pub fn convolutional(&self) -> bool {
        matches!(self, BaselineKind::Cnn1d | BaselineKind::Amcnn)
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self> {
        ALL_BASELINE_KINDS
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                BaselineError::Argument(format!(
                    "unknown baseline kind {s:?}; expected one of bilstm_attn, cnn1d, han, rcnn, amcnn"
                ))
            })
    }
}

/// Architecture hyperparameters. The filter fields are required exactly when
/// the kind is convolutional and must be absent otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub embedding_dim: usize,
    pub hidden_units: usize,
    #[serde(default)]
    pub filters: Option<usize>,
    #[serde(default)]
    pub filter_sizes: Option<Vec<usize>>,
    pub dropout: f64,
}

impl BaselineConfig {
    /// Reference configuration per kind: 300-dimensional trained-from-scratch
    /// embeddings and 0.3 dropout throughout; 128 recurrent units per
    /// direction; convolution banks of 256 filters (widths 1–6 for the plain
    /// CNN, 3–5 for the attention-multichannel variant).
    pub fn default_for(kind: BaselineKind) -> Self {
        let (filters, filter_sizes) = match kind {
            BaselineKind::Cnn1d => (Some(256), Some(vec![1, 2, 3, 4, 5, 6])),
            BaselineKind::Amcnn => (Some(256), Some(vec![3, 4, 5])),
            _ => (None, None),
        };
        Self {
            kind,
            embedding_dim: 300,
            hidden_units: 128,
            filters,
            filter_sizes,
            dropout: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.hidden_units == 0 {
            return Err(BaselineError::Argument(
                "embedding_dim and hidden_units must be ≥ 1".into(),
            ));
        }
        if !self.dropout.is_finite() || !(0.0..1.0).contains(&self.dropout) {
            return Err(BaselineError::Argument(format!(
                "dropout {} must lie in [0, 1)",
                self.dropout
            )));
        }
        if self.kind.convolutional() {
            match (&self.filters, &self.filter_sizes) {
                (Some(f), Some(sizes)) if *f >= 1 && !sizes.is_empty() => {
                    if sizes.iter().any(|&w| w == 0) {
                        return Err(BaselineError::Argument(
                            "filter widths must be ≥ 1".into(),
                        ));
                    }
                }
                _ => {
                    return Err(BaselineError::Argument(format!(
                        "kind {} requires filters ≥ 1 and a non-empty filter_sizes list",
                        self.kind
                    )));
                }
            }
        } else if self.filters.is_some() || self.filter_sizes.is_some() {
            return Err(BaselineError::Argument(format!(
                "kind {} takes no convolution filters",
                self.kind
            )));
        }
        Ok(())
    }

    pub(crate) fn filter_sizes(&self) -> &[usize] {
        self.filter_sizes.as_deref().unwrap_or(&[])
    }

    pub(crate) fn filter_count(&self) -> usize {
        self.filters.unwrap_or(0)
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnn_defaults_match_the_reference_banks() {
        let cfg = BaselineConfig::default_for(BaselineKind::Cnn1d);
        assert_eq!(cfg.filters, Some(256));
        assert_eq!(cfg.filter_sizes, Some(vec![1, 2, 3, 4, 5, 6]));
        cfg.validate().unwrap();
    }

    #[test]
    fn convolutional_kinds_require_filter_fields() {
        let mut cfg = BaselineConfig::default_for(BaselineKind::Cnn1d);
        cfg.filter_sizes = None;
        assert!(matches!(cfg.validate(), Err(BaselineError::Argument(_))));
    }

    #[test]
    fn recurrent_kinds_reject_filter_fields() {
        let mut cfg = BaselineConfig::default_for(BaselineKind::BilstmAttn);
        cfg.filters = Some(16);
        assert!(matches!(cfg.validate(), Err(BaselineError::Argument(_))));
        let ok = BaselineConfig::default_for(BaselineKind::Rcnn);
        ok.validate().unwrap();
    }

    #[test]
    fn kinds_round_trip_through_strings() {
        for kind in ALL_BASELINE_KINDS {
            assert_eq!(kind.as_str().parse::<BaselineKind>().unwrap(), kind);
        }
        assert!("textgcn".parse::<BaselineKind>().is_err());
    }
}
