//! Training loop for the traditional baselines. The contract deliberately
//! mirrors the backbone fine-tuning loop — same hyperparameter struct, same
//! history shape, same leakage and stopping rules — so the comparison
//! harness can treat both families uniformly. Only the default learning
//! rate differs: from-scratch embeddings want a far larger step than a
//! pretrained encoder.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fakestack_backbones::{FineTuneEpoch, FineTuneHistory, TrainConfig};
use fakestack_data::{DatasetSplit, Label};
use fakestack_metrics::{confusion, weighted};
use fakestack_nn::{
    cross_entropy_grad, derive_seed, mean_cross_entropy, Optimizer, OptimizerKind,
};

use crate::model::{BaselineModel, EncodedPost};
use crate::{BaselineError, Result};

/// Default learning rate for from-scratch baselines.
pub const BASELINE_LR_DEFAULT: f64 = 1e-3;

/// The shared hyperparameter struct with the baseline learning-rate default.
pub fn baseline_train_defaults() -> TrainConfig {
    TrainConfig {
        learning_rate: BASELINE_LR_DEFAULT,
        ..TrainConfig::default()
    }
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

/// Trains `model` on `train`, tracking accuracy on `val`, and returns the
/// parameters of the best validation epoch.
///
/// With `epochs = 0` the model is returned untouched and the history is
/// empty. The model's sequence cap is taken from `cfg.max_seq_len`.
pub fn train_baseline(
    mut model: BaselineModel,
    train: &DatasetSplit,
    val: &DatasetSplit,
    cfg: &TrainConfig,
) -> Result<(BaselineModel, FineTuneHistory)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(BaselineError::Argument(
            "train and validation splits must both be non-empty".into(),
        ));
    }
    let shared = overlapping_ids(train, val);
    if !shared.is_empty() {
        return Err(BaselineError::Leakage { ids: shared });
    }

    let mut history = FineTuneHistory::default();
    if cfg.epochs == 0 {
        return Ok((model, history));
    }
    model.max_seq_len = cfg.max_seq_len;

    let encoded: Vec<EncodedPost> = train
        .posts()
        .iter()
        .map(|p| model.encode(&p.text))
        .collect();
    let labels: Vec<Label> = train.posts().iter().map(|p| p.label).collect();

    let lengths: Vec<usize> = model
        .params
        .entries()
        .iter()
        .map(|(_, _, data, _)| data.len())
        .collect();
    let mut optimizer = Optimizer::for_lengths(OptimizerKind::adamw(cfg.learning_rate), &lengths);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best: Option<(f64, crate::model::BaselineParams, usize)> = None;
    let mut since_best = 0usize;
    let dropout_rate = model.config.dropout;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut logits = Array2::zeros((batch.len(), 2));
            let mut caches = Vec::with_capacity(batch.len());
            for (r, &i) in batch.iter().enumerate() {
                let (l, cache) = model
                    .params
                    .run(&encoded[i], Some((&mut dropout_rng, dropout_rate)));
                logits.row_mut(r).assign(&l);
                caches.push(cache);
            }
            let batch_labels: Vec<Label> = batch.iter().map(|&i| labels[i]).collect();
            let loss = mean_cross_entropy(&logits, &batch_labels);
            if !loss.is_finite() {
                return Err(BaselineError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += loss * batch.len() as f64;

            // Per-row gradients are already scaled by 1/batch, so summing the
            // per-sample backward passes yields the mean-loss gradient.
            let dlogits = cross_entropy_grad(&logits, &batch_labels);
            let mut grads = model.params.zeros_like();
            for (r, &i) in batch.iter().enumerate() {
                let drow = dlogits.row(r).to_owned();
                model.params.backprop(&encoded[i], &caches[r], &drow, &mut grads);
            }

            let grad_entries = grads.entries();
            let grad_slices: Vec<&[f64]> = grad_entries.iter().map(|(_, _, s, _)| *s).collect();
            let mut tensors: Vec<(&mut [f64], bool)> = model
                .params
                .entries_mut()
                .into_iter()
                .map(|(_, s, d)| (s, d))
                .collect();
            optimizer.step_slices(&mut tensors, &grad_slices);
        }

        // Validation goes through the same public path a caller would use,
        // so history entries can be reproduced exactly.
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
            best = Some((val_accuracy, model.params.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience {
                history.stopped_early = true;
                break;
            }
        }
    }

    if let Some((_, params, epoch)) = best {
        model.params = params;
        history.best_epoch = Some(epoch);
    }
    Ok((model, history))
}
