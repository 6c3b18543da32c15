//! Joint fine-tuning of a backbone encoder and its MLP head against
//! cross-entropy, with best-checkpoint selection on validation accuracy and
//! early stopping.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use fakestack_data::{DatasetSplit, Label};
use fakestack_metrics::{confusion, weighted};
use fakestack_nn::{
    build_mlp_head, cross_entropy_grad, derive_seed, mean_cross_entropy, MlpHeadConfig,
    NetworkParams, Optimizer, OptimizerKind,
};

use crate::encoder::{pool, pool_backward, EncoderGrads, EncoderParams};
use crate::model::TrainedBaseModel;
use crate::provider::WeightsProvider;
use crate::registry::{default_pooling, BackboneId};
use crate::tokenizer::{pad_batch, TokenizedPost};
use crate::{BackboneError, Result};

/// Lowest learning rate accepted without the force flag.
pub const LR_MIN: f64 = 2e-6;
/// Highest learning rate accepted without the force flag.
pub const LR_MAX: f64 = 1e-3;

/// Fine-tuning hyperparameters. The learning-rate default is the
/// conservative end of the accepted range; epochs, batch size, and patience
/// defaults are the standard workhorse values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Consecutive epochs without validation improvement before stopping;
    /// 0 disables early stopping.
    pub early_stop_patience: usize,
    pub max_seq_len: usize,
    /// Accept learning rates outside [LR_MIN, LR_MAX].
    pub force_learning_rate: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-6,
            epochs: 10,
            batch_size: 32,
            seed: 42,
            early_stop_patience: 3,
            max_seq_len: 128,
            force_learning_rate: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(BackboneError::Argument(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !self.force_learning_rate
            && !(LR_MIN..=LR_MAX).contains(&self.learning_rate)
        {
            return Err(BackboneError::Argument(format!(
                "learning_rate {} outside the accepted range [{LR_MIN:e}, {LR_MAX:e}]; \
                 set force_learning_rate to override",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(BackboneError::Argument("batch_size must be ≥ 1".into()));
        }
        if self.max_seq_len < 3 {
            return Err(BackboneError::Argument(format!(
                "max_seq_len {} leaves no room for word tokens",
                self.max_seq_len
            )));
        }
        Ok(())
    }
}

/// One epoch of the fine-tuning history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineTuneEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Fine-tuning history: per-epoch records, the epoch whose checkpoint was
/// returned, and whether patience triggered the stop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FineTuneHistory {
    pub epochs: Vec<FineTuneEpoch>,
    /// 1-based epoch number whose checkpoint the returned model carries
    /// (matches [`FineTuneEpoch::epoch`]); `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

fn overlapping_ids(train: &DatasetSplit, val: &DatasetSplit) -> Vec<String> {
    let val_ids: BTreeSet<&str> = val.ids().collect();
    let mut shared: Vec<String> = train
        .ids()
        .filter(|id| val_ids.contains(id))
        .map(String::from)
        .collect();
    shared.sort();
    shared.dedup();
    shared
}

/// Fine-tunes `backbone` with a fresh MLP head on `train`, tracking accuracy
/// on `val`. Returns the checkpoint of the best validation epoch.
///
/// With `epochs = 0` the freshly initialized model is returned untouched
/// (its fingerprint is the deterministic function of backbone and seed
/// alone) and the history is empty.
pub fn fine_tune(
    provider: &dyn WeightsProvider,
    backbone: &BackboneId,
    head_cfg: &MlpHeadConfig,
    train: &DatasetSplit,
    val: &DatasetSplit,
    cfg: &TrainConfig,
) -> Result<(TrainedBaseModel, FineTuneHistory)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(BackboneError::Argument(
            "train and validation splits must both be non-empty".into(),
        ));
    }
    let shared = overlapping_ids(train, val);
    if !shared.is_empty() {
        return Err(BackboneError::Leakage { ids: shared });
    }

    let pretrained = provider.fetch(backbone)?;
    let width = pretrained.hidden_width();
    let head = build_mlp_head(head_cfg, width, derive_seed(cfg.seed, 7))?;
    let mut model = TrainedBaseModel {
        backbone: *backbone,
        encoder: pretrained.encoder,
        tokenizer: pretrained.tokenizer,
        head,
        pooling: default_pooling(backbone.name),
        max_seq_len: cfg.max_seq_len,
    };

    let mut history = FineTuneHistory::default();
    if cfg.epochs == 0 {
        return Ok((model, history));
    }

    let tokenized: Vec<TokenizedPost> = train
        .posts()
        .iter()
        .map(|p| model.tokenizer.encode(&p.text, cfg.max_seq_len))
        .collect::<Result<_>>()?;
    let labels: Vec<Label> = train.posts().iter().map(|p| p.label).collect();

    let mut lengths: Vec<usize> = model
        .encoder
        .tensor_slices()
        .iter()
        .map(|s| s.len())
        .collect();
    lengths.extend(
        model
            .head
            .clone()
            .tensors_mut()
            .iter()
            .map(|(s, _)| s.len()),
    );
    let mut optimizer =
        Optimizer::for_lengths(OptimizerKind::adamw(cfg.learning_rate), &lengths);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best: Option<(f64, EncoderParams, NetworkParams, usize)> = None;
    let mut since_best = 0usize;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let batch_posts: Vec<TokenizedPost> =
                batch.iter().map(|&i| tokenized[i].clone()).collect();
            let padded = pad_batch(&model.tokenizer, &batch_posts);
            let batch_labels: Vec<Label> = batch.iter().map(|&i| labels[i]).collect();

            let mut caches = Vec::with_capacity(batch.len());
            let mut pooled = Array2::zeros((batch.len(), width));
            for (r, (ids, mask)) in padded.iter().enumerate() {
                let (hidden, cache) = model.encoder.forward_train(ids, mask)?;
                pooled.row_mut(r).assign(&pool(&hidden, mask, model.pooling));
                caches.push(cache);
            }

            let (logits, head_cache) = model
                .head
                .forward_train(&pooled.view(), Some(&mut dropout_rng))?;
            let loss = mean_cross_entropy(&logits, &batch_labels);
            if !loss.is_finite() {
                return Err(BackboneError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += loss * batch.len() as f64;

            let dlogits = cross_entropy_grad(&logits, &batch_labels);
            let (head_grads, dpooled) = model.head.backward_with_input(&head_cache, &dlogits);
            let mut enc_grads = EncoderGrads::zeros_like(&model.encoder);
            for (r, (cache, (ids, mask))) in caches.iter().zip(&padded).enumerate() {
                let dhidden =
                    pool_backward(&dpooled.row(r).to_owned(), ids.len(), mask, model.pooling);
                model.encoder.backward_into(cache, &dhidden, &mut enc_grads);
            }

            let mut tensors = model.encoder.tensors_mut();
            tensors.extend(model.head.tensors_mut());
            let mut grad_slices = enc_grads.tensor_slices();
            grad_slices.extend(head_grads.tensor_slices());
            optimizer.step_slices(&mut tensors, &grad_slices);
            drop(tensors);
            model.head.apply_batch_stats(&head_cache);
        }

        // Validation accuracy is computed through the same public path a
        // caller would use, so history entries can be reproduced exactly.
        let predictions = model.predict_batch(val.posts())?;
        let cm = confusion(&predictions, val)?;
        let val_accuracy = weighted(&cm)?.accuracy;
        history.epochs.push(FineTuneEpoch {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            val_accuracy,
        });

        let improved = best.as_ref().map_or(true, |(b, ..)| val_accuracy > *b);
        if improved {
            best = Some((val_accuracy, model.encoder.clone(), model.head.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience {
                history.stopped_early = true;
                break;
            }
        }
    }

    if let Some((_, encoder, head, epoch)) = best {
        model.encoder = encoder;
        model.head = head;
        history.best_epoch = Some(epoch);
    }
    Ok((model, history))
}
