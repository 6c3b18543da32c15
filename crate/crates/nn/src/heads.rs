use ndarray::{Array1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::ffnet::{logits_to_probs, FfLayer, NetworkParams, Norm};
use crate::init::{derive_seed, xavier_uniform};
use crate::probs::ClassProbabilities;
use crate::{NnError, Result};

/// Normalization flavor for the classification head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    LayerNorm,
    BatchNorm,
}

/// Configuration of the MLP classification head placed on top of a backbone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpHeadConfig {
    pub hidden_units: usize,
    pub dropout_rate: f64,
    pub normalization: NormKind,
    pub output_classes: usize,
}

impl Default for MlpHeadConfig {
    fn default() -> Self {
        Self {
            hidden_units: 64,
            dropout_rate: 0.1,
            normalization: NormKind::LayerNorm,
            output_classes: 2,
        }
    }
}

impl MlpHeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units < 1 {
            return Err(NnError::Argument("hidden_units must be ≥ 1".into()));
        }
        if self.output_classes != 2 {
            return Err(NnError::Argument("output_classes is fixed at 2".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NnError::Argument(format!(
                "dropout_rate {} outside [0,1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

/// Configuration of the stacking meta-learner network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaNetConfig {
    pub layer1_units: usize,
    pub layer2_units: usize,
    pub output_classes: usize,
}

impl Default for MetaNetConfig {
    fn default() -> Self {
        Self {
            layer1_units: 64,
            layer2_units: 128,
            output_classes: 2,
        }
    }
}

impl MetaNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer1_units < 1 || self.layer2_units < 1 {
            return Err(NnError::Argument("meta-net layer sizes must be ≥ 1".into()));
        }
        if self.output_classes != 2 {
            return Err(NnError::Argument("output_classes is fixed at 2".into()));
        }
        Ok(())
    }
}

fn dense(
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    norm: Option<Norm>,
    dropout: f64,
    seed: u64,
) -> FfLayer {
    FfLayer {
        weight: xavier_uniform(in_dim, out_dim, seed),
        bias: Array1::zeros(out_dim),
        activation,
        norm,
        dropout,
    }
}

/// Builds the classification head:
/// dense(input→hidden) → normalization → dense(hidden→hidden)+tanh →
/// dropout → dense(hidden→2) → softmax (applied by the forward functions).
/// Weights are Xavier-initialized, biases zero.
pub fn build_mlp_head(cfg: &MlpHeadConfig, input_dim: usize, seed: u64) -> Result<NetworkParams> {
    cfg.validate()?;
    if input_dim < 1 {
        return Err(NnError::Argument("input_dim must be ≥ 1".into()));
    }
    let h = cfg.hidden_units;
    let norm = match cfg.normalization {
        NormKind::LayerNorm => Norm::layer(h),
        NormKind::BatchNorm => Norm::batch(h),
    };
    let params = NetworkParams {
        layers: vec![
            dense(input_dim, h, Activation::Linear, Some(norm), 0.0, derive_seed(seed, 0)),
            dense(h, h, Activation::Tanh, None, cfg.dropout_rate, derive_seed(seed, 1)),
            dense(h, 2, Activation::Linear, None, 0.0, derive_seed(seed, 2)),
        ],
        seed,
    };
    params.validate()?;
    Ok(params)
}

/// Builds the meta-learner:
/// dense(input→layer1)+tanh → dense(layer1→layer2)+relu → dense(layer2→2) →
/// softmax (applied by the forward functions). Xavier init throughout.
pub fn build_meta_net(cfg: &MetaNetConfig, input_dim: usize, seed: u64) -> Result<NetworkParams> {
    cfg.validate()?;
    if input_dim < 1 {
        return Err(NnError::Argument("input_dim must be ≥ 1".into()));
    }
    let params = NetworkParams {
        layers: vec![
            dense(input_dim, cfg.layer1_units, Activation::Tanh, None, 0.0, derive_seed(seed, 0)),
            dense(cfg.layer1_units, cfg.layer2_units, Activation::Relu, None, 0.0, derive_seed(seed, 1)),
            dense(cfg.layer2_units, 2, Activation::Linear, None, 0.0, derive_seed(seed, 2)),
        ],
        seed,
    };
    params.validate()?;
    Ok(params)
}

/// Forward pass of the classification head. In training mode, dropout masks
/// are drawn from a ChaCha stream seeded by the network's own seed, keeping
/// the call deterministic; evaluation mode is dropout-free.
pub fn head_forward(
    params: &NetworkParams,
    features: &ArrayView2<f64>,
    training: bool,
) -> Result<Vec<ClassProbabilities>> {
    if training {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let (logits, _) = params.forward_train(features, Some(&mut rng))?;
        logits_to_probs(&logits)
    } else {
        params.probabilities(features)
    }
}

/// Forward pass of the meta-learner (no dropout anywhere in that net).
pub fn meta_forward(
    params: &NetworkParams,
    meta_features: &ArrayView2<f64>,
) -> Result<Vec<ClassProbabilities>> {
    params.probabilities(meta_features)
}
