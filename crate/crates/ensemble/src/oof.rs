//! Out-of-fold prediction generation: the leakage-safe source of
//! meta-training features. Each member trains one model per fold on the
//! other folds and predicts only the posts that model never saw.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use fakestack_backbones::{
    fine_tune, BackboneId, MlpHeadConfig, TrainConfig, WeightsProvider,
};
use fakestack_data::{kfold_partition, DatasetSplit, SplitName};
use fakestack_nn::{derive_seed, PredictionRecord};

use crate::{EnsembleError, Result};

/// Where the meta-learner's training features come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaSource {
    /// Members re-predict the split they were fine-tuned on (the literal
    /// pipeline description; risks leakage from overfit members).
    Paper,
    /// Members predict the validation split.
    Val,
    /// K-fold out-of-fold predictions on the training split (default).
    Oof,
}

impl MetaSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetaSource::Paper => "paper",
            MetaSource::Val => "val",
            MetaSource::Oof => "oof",
        }
    }
}

impl Default for MetaSource {
    fn default() -> Self {
        MetaSource::Oof
    }
}

impl std::str::FromStr for MetaSource {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(MetaSource::Paper),
            "val" => Ok(MetaSource::Val),
            "oof" => Ok(MetaSource::Oof),
            other => Err(EnsembleError::Argument(format!(
                "unknown meta source {other:?}; expected paper, val, or oof"
            ))),
        }
    }
}

/// Default fold count for out-of-fold meta features.
pub const OOF_DEFAULT_FOLDS: usize = 5;

/// Everything needed to fine-tune one ensemble member.
#[derive(Debug, Clone)]
pub struct MemberSpec {
    pub backbone: BackboneId,
    pub head: MlpHeadConfig,
    pub train: TrainConfig,
}

/// Out-of-fold records plus the bookkeeping needed to audit that no fold
/// model predicted a post it trained on.
#[derive(Debug, Clone)]
pub struct OofPredictions {
    /// Member name → one record per training post, in training-split order.
    pub records_by_model: BTreeMap<String, Vec<PredictionRecord>>,
    /// Post id → index of the fold that held it out.
    pub fold_of_post: BTreeMap<String, usize>,
    pub k: usize,
}

/// Carves an early-stopping validation subset out of a fold's training
/// portion (every fifth post), keeping the holdout fold completely unseen
/// by both gradient updates and checkpoint selection.
fn carve_early_stop(portion: &DatasetSplit) -> Result<(DatasetSplit, DatasetSplit)> {
    let n = portion.len();
    let val_idx: Vec<usize> = (0..n).filter(|i| i % 5 == 4).collect();
    let val_idx = if val_idx.is_empty() { vec![n - 1] } else { val_idx };
    let train_idx: Vec<usize> = (0..n).filter(|i| !val_idx.contains(i)).collect();
    if train_idx.is_empty() {
        return Err(EnsembleError::Argument(format!(
            "fold training portion of {n} posts is too small to carve an early-stop subset"
        )));
    }
    let train = portion.select(&train_idx, SplitName::Custom)?;
    let val = portion.select(&val_idx, SplitName::Custom)?;
    Ok((train, val))
}

/// Trains `k` fold-models per member on the k-fold partition of `train` and
/// collects each member's predictions on the folds its models never saw.
///
/// Fold-model seeds derive from `seed + member index` streamed by fold, so
/// members and folds are independently reproducible. Training failures are
/// annotated with the member and fold where they occurred.
pub fn generate_oof_predictions(
    provider: &dyn WeightsProvider,
    members: &[MemberSpec],
    train: &DatasetSplit,
    k: usize,
    seed: u64,
) -> Result<OofPredictions> {
    if members.is_empty() {
        return Err(EnsembleError::Argument(
            "at least one member is required".into(),
        ));
    }
    if k < 2 {
        return Err(EnsembleError::Argument(format!(
            "out-of-fold generation needs k ≥ 2, got {k}"
        )));
    }
    let folds = kfold_partition(train, k, seed)?;

    let mut fold_of_post = BTreeMap::new();
    for (fold_idx, (_, holdout)) in folds.iter().enumerate() {
        for id in holdout.ids() {
            fold_of_post.insert(id.to_string(), fold_idx);
        }
    }

    let mut records_by_model = BTreeMap::new();
    for (m, member) in members.iter().enumerate() {
        let member_name = member.backbone.name.to_string();
        let member_seed = seed.wrapping_add(m as u64);
        let mut by_id: BTreeMap<String, PredictionRecord> = BTreeMap::new();

        for (fold_idx, (portion, holdout)) in folds.iter().enumerate() {
            let (fold_train, fold_val) = carve_early_stop(portion)?;
            let cfg = TrainConfig {
                seed: derive_seed(member_seed, fold_idx as u64),
                ..member.train.clone()
            };
            let annotate = |source| EnsembleError::MemberTraining {
                member: member_name.clone(),
                fold: fold_idx,
                source,
            };
            let (model, _) =
                fine_tune(provider, &member.backbone, &member.head, &fold_train, &fold_val, &cfg)
                    .map_err(&annotate)?;
            let predictions = model.predict_batch(holdout.posts()).map_err(&annotate)?;
            for record in predictions {
                let id = record.post_id.clone();
                if by_id.insert(id.clone(), record).is_some() {
                    return Err(EnsembleError::Integrity {
                        model: member_name.clone(),
                        post_id: id,
                    });
                }
            }
        }

        // Emit in training-split order so the matrix rows follow the split.
        let mut ordered = Vec::with_capacity(train.len());
        for id in train.ids() {
            match by_id.remove(id) {
                Some(record) => ordered.push(record),
                None => {
                    return Err(EnsembleError::Completeness {
                        model: member_name.clone(),
                        post_id: id.to_string(),
                    })
                }
            }
        }
        records_by_model.insert(member_name, ordered);
    }

    Ok(OofPredictions {
        records_by_model,
        fold_of_post,
        k,
    })
}
