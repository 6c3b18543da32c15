use fakestack_data::Label;
use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{log_sum_exp, softmax_rows};
use crate::ffnet::NetworkParams;
use crate::init::derive_seed;
use crate::optim::{Optimizer, OptimizerKind};
use crate::{NnError, Result};

/// Which step rule [`train_network`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerChoice {
    #[default]
    Adamw,
    Sgd,
}

/// Mini-batch training settings. The learning-rate default matches the
/// fine-tuning regime (2e-6); toy problems want something far larger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerChoice,
    pub weight_decay: f64,
    pub shuffle: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            learning_rate: 2e-6,
            epochs: 10,
            batch_size: 32,
            seed: 42,
            optimizer: OptimizerChoice::Adamw,
            weight_decay: 0.01,
            shuffle: true,
        }
    }
}

impl TrainSettings {
    pub fn optimizer_kind(&self) -> OptimizerKind {
        match self.optimizer {
            OptimizerChoice::Adamw => OptimizerKind::AdamW {
                learning_rate: self.learning_rate,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
                weight_decay: self.weight_decay,
            },
            OptimizerChoice::Sgd => OptimizerKind::sgd(self.learning_rate),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NnError::Argument(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(NnError::Argument("batch_size must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Loss and accuracy measured over the full training set in evaluation mode
/// at the end of an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
}

/// Per-epoch history; epoch indices are 1-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_accuracy)
    }
}

/// Mean cross-entropy of logits against gold labels, computed through
/// log-sum-exp for stability.
pub fn mean_cross_entropy(logits: &Array2<f64>, labels: &[Label]) -> f64 {
    let mut total = 0.0;
    for (row, label) in logits.rows().into_iter().zip(labels) {
        total += log_sum_exp(row) - row[label.index()];
    }
    total / labels.len() as f64
}

/// dL/dlogits of the mean cross-entropy: (softmax − one-hot)/N.
pub fn cross_entropy_grad(logits: &Array2<f64>, labels: &[Label]) -> Array2<f64> {
    let n = labels.len() as f64;
    let mut g = softmax_rows(logits);
    for (mut row, label) in g.rows_mut().into_iter().zip(labels) {
        row[label.index()] -= 1.0;
    }
    g.mapv_inplace(|v| v / n);
    g
}

/// Fraction of rows whose argmax equals the gold label; an exact logit tie
/// counts as predicting FAKE.
pub fn logit_accuracy(logits: &Array2<f64>, labels: &[Label]) -> f64 {
    let correct = logits
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, label)| {
            let predicted = if row[1] > row[0] { Label::Real } else { Label::Fake };
            predicted == **label
        })
        .count();
    correct as f64 / labels.len() as f64
}

/// Trains a network by mini-batch gradient descent on mean cross-entropy.
///
/// Returns the trained parameters and a per-epoch history of full-set loss
/// and accuracy (evaluation mode). Deterministic per (params, data, seed).
/// With `epochs = 0` the parameters are returned unchanged and the history
/// is empty.
pub fn train_network(
    params: &NetworkParams,
    inputs: &ArrayView2<f64>,
    labels: &[Label],
    cfg: &TrainSettings,
) -> Result<(NetworkParams, TrainHistory)> {
    cfg.validate()?;
    params.validate()?;
    let mut trained = params.clone();
    let mut history = TrainHistory::default();
    if cfg.epochs == 0 {
        return Ok((trained, history));
    }
    if inputs.nrows() != labels.len() {
        return Err(NnError::Argument(format!(
            "{} input rows but {} labels",
            inputs.nrows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(NnError::Argument("no training data".into()));
    }
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(NnError::Argument("inputs contain non-finite values".into()));
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut optimizer = Optimizer::new(cfg.optimizer_kind(), &trained);
    let n = labels.len();

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch_x = inputs.select(Axis(0), chunk);
            let batch_y: Vec<Label> = chunk.iter().map(|&i| labels[i]).collect();

            let (logits, cache) = trained.forward_train(&batch_x.view(), Some(&mut dropout_rng))?;
            let loss = mean_cross_entropy(&logits, &batch_y);
            if !loss.is_finite() {
                return Err(NnError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            let dlogits = cross_entropy_grad(&logits, &batch_y);
            let grads = trained.backward(&cache, &dlogits);
            optimizer.step(&mut trained, &grads);
            trained.apply_batch_stats(&cache);
        }

        let logits = trained.forward_eval(inputs)?;
        history.epochs.push(EpochStats {
            epoch,
            train_loss: mean_cross_entropy(&logits, labels),
            train_accuracy: logit_accuracy(&logits, labels),
        });
    }
    Ok((trained, history))
}
