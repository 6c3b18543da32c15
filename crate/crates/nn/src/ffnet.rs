use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::activation::{softmax_rows, Activation};
use crate::probs::ClassProbabilities;
use crate::{NnError, Result};

/// Epsilon inside every normalization denominator.
pub(crate) const NORM_EPS: f64 = 1e-5;
/// Momentum for batch-norm running statistics.
const BN_MOMENTUM: f64 = 0.1;

/// Normalization applied between a layer's affine map and its activation.
#[derive(Debug, Clone, PartialEq)]
pub enum Norm {
    /// Normalizes each sample over its features; batch-size independent.
    Layer { gamma: Array1<f64>, beta: Array1<f64> },
    /// Normalizes each feature over the batch; keeps running statistics for
    /// evaluation mode.
    Batch {
        gamma: Array1<f64>,
        beta: Array1<f64>,
        running_mean: Array1<f64>,
        running_var: Array1<f64>,
    },
}

impl Norm {
    pub fn layer(width: usize) -> Self {
        Norm::Layer {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
        }
    }

    pub fn batch(width: usize) -> Self {
        Norm::Batch {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }

    pub fn gamma(&self) -> &Array1<f64> {
        match self {
            Norm::Layer { gamma, .. } | Norm::Batch { gamma, .. } => gamma,
        }
    }

    pub fn beta(&self) -> &Array1<f64> {
        match self {
            Norm::Layer { beta, .. } | Norm::Batch { beta, .. } => beta,
        }
    }

    fn width(&self) -> usize {
        self.gamma().len()
    }
}

/// One dense layer: affine map, optional normalization, element-wise
/// activation, then (training only) inverted dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct FfLayer {
    /// in_dim × out_dim; outputs are `x · weight + bias`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
    pub norm: Option<Norm>,
    /// Dropout rate in [0, 1); 0 disables dropout.
    pub dropout: f64,
}

impl FfLayer {
    pub fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// An ordered stack of dense layers plus the seed they were built from.
/// The network output is raw logits; softmax is applied by the callers
/// ([`crate::head_forward`], training loss) rather than stored as a layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<FfLayer>,
    pub seed: u64,
}

/// Per-layer gradients, shaped exactly like the trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub dweight: Array2<f64>,
    pub dbias: Array1<f64>,
    /// (dgamma, dbeta) when the layer is normalized.
    pub dnorm: Option<(Array1<f64>, Array1<f64>)>,
}

/// Gradients for a whole network, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBuffers {
    pub layers: Vec<LayerGrads>,
}

struct NormCache {
    x_hat: Array2<f64>,
    /// Per-row (layer norm) or per-feature (batch norm) 1/√(var+ε).
    inv_std: Array1<f64>,
    /// Batch statistics (mean, biased var) recorded by batch norm so the
    /// training loop can refresh the running statistics afterwards.
    batch_stats: Option<(Array1<f64>, Array1<f64>)>,
}

struct LayerCache {
    input: Array2<f64>,
    /// Post-norm, pre-activation values.
    pre_act: Array2<f64>,
    /// Post-activation, pre-dropout values.
    post_act: Array2<f64>,
    norm: Option<NormCache>,
    /// Inverted-dropout mask (entries 0 or 1/(1−rate)).
    mask: Option<Array2<f64>>,
}

/// Opaque forward cache consumed by [`NetworkParams::backward`].
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    pub logits: Array2<f64>,
}

impl NetworkParams {
    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, FfLayer::in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, FfLayer::out_dim)
    }

    /// Number of trainable scalars (weights, biases, norm scale/shift).
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.weight.len() + l.bias.len() + l.norm.as_ref().map_or(0, |n| 2 * n.width())
            })
            .sum()
    }

    /// Checks dimension chaining, per-layer widths, dropout range, and
    /// finiteness of every entry.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(NnError::Argument("network has no layers".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.bias.len() != layer.out_dim() {
                return Err(NnError::Shape {
                    context: format!("layer {i} bias"),
                    expected: layer.out_dim(),
                    actual: layer.bias.len(),
                });
            }
            if let Some(norm) = &layer.norm {
                if norm.width() != layer.out_dim() {
                    return Err(NnError::Shape {
                        context: format!("layer {i} normalization"),
                        expected: layer.out_dim(),
                        actual: norm.width(),
                    });
                }
            }
            if !(0.0..1.0).contains(&layer.dropout) {
                return Err(NnError::Argument(format!(
                    "layer {i} dropout rate {} outside [0,1)",
                    layer.dropout
                )));
            }
            if i + 1 < self.layers.len() && self.layers[i + 1].in_dim() != layer.out_dim() {
                return Err(NnError::Shape {
                    context: format!("layer {} input", i + 1),
                    expected: layer.out_dim(),
                    actual: self.layers[i + 1].in_dim(),
                });
            }
            let finite = layer.weight.iter().all(|v| v.is_finite())
                && layer.bias.iter().all(|v| v.is_finite());
            if !finite {
                return Err(NnError::Argument(format!("layer {i} has non-finite entries")));
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::Shape {
                context: "network input".into(),
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    /// Evaluation-mode forward pass to logits: dropout inert, batch norm on
    /// running statistics. Deterministic.
    pub fn forward_eval(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut a = x.to_owned();
        for layer in &self.layers {
            let mut z = a.dot(&layer.weight) + &layer.bias;
            if let Some(norm) = &layer.norm {
                z = match norm {
                    Norm::Layer { gamma, beta } => layer_norm_forward(&z, gamma, beta).0,
                    Norm::Batch {
                        gamma,
                        beta,
                        running_mean,
                        running_var,
                    } => {
                        let inv_std = running_var.mapv(|v| 1.0 / (v + NORM_EPS).sqrt());
                        let mut out = z;
                        for mut row in out.rows_mut() {
                            for j in 0..row.len() {
                                row[j] = gamma[j] * (row[j] - running_mean[j]) * inv_std[j]
                                    + beta[j];
                            }
                        }
                        out
                    }
                };
            }
            z.mapv_inplace(|v| layer.activation.apply(v));
            a = z;
        }
        Ok(a)
    }

    /// Training-mode forward pass. Batch norm uses batch statistics; dropout
    /// draws masks from `dropout_rng` when one is supplied (gradient checking
    /// passes `None` to keep the loss a fixed differentiable function).
    pub fn forward_train(
        &self,
        x: &ArrayView2<f64>,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(x)?;
        let mut a = x.to_owned();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = a.clone();
            let z = a.dot(&layer.weight) + &layer.bias;

            let (pre_act, norm_cache) = match &layer.norm {
                None => (z, None),
                Some(Norm::Layer { gamma, beta }) => {
                    let (out, x_hat, inv_std) = layer_norm_forward(&z, gamma, beta);
                    (
                        out,
                        Some(NormCache {
                            x_hat,
                            inv_std,
                            batch_stats: None,
                        }),
                    )
                }
                Some(Norm::Batch { gamma, beta, .. }) => {
                    let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                    let var = z
                        .mapv(|v| v * v)
                        .mean_axis(Axis(0))
                        .expect("non-empty batch")
                        - mean.mapv(|m| m * m);
                    let var = var.mapv(|v| v.max(0.0));
                    let inv_std = var.mapv(|v| 1.0 / (v + NORM_EPS).sqrt());
                    let mut x_hat = z.clone();
                    for mut row in x_hat.rows_mut() {
                        for j in 0..row.len() {
                            row[j] = (row[j] - mean[j]) * inv_std[j];
                        }
                    }
                    let mut out = x_hat.clone();
                    for mut row in out.rows_mut() {
                        for j in 0..row.len() {
                            row[j] = gamma[j] * row[j] + beta[j];
                        }
                    }
                    (
                        out,
                        Some(NormCache {
                            x_hat,
                            inv_std,
                            batch_stats: Some((mean, var)),
                        }),
                    )
                }
            };

            let post_act = pre_act.mapv(|v| layer.activation.apply(v));

            let (output, mask) = if layer.dropout > 0.0 {
                match dropout_rng.as_deref_mut() {
                    Some(rng) => {
                        let keep = 1.0 - layer.dropout;
                        let mask = Array2::from_shape_simple_fn(post_act.dim(), || {
                            if rng.gen::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        });
                        (&post_act * &mask, Some(mask))
                    }
                    None => (post_act.clone(), None),
                }
            } else {
                (post_act.clone(), None)
            };

            caches.push(LayerCache {
                input,
                pre_act,
                post_act,
                norm: norm_cache,
                mask,
            });
            a = output;
        }
        Ok((
            a.clone(),
            ForwardCache {
                layers: caches,
                logits: a,
            },
        ))
    }

    /// Backward pass: given dL/dlogits, produces gradients for every
    /// trainable tensor. Must be called with the cache of the matching
    /// training-mode forward pass.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &Array2<f64>) -> GradBuffers {
        self.backward_with_input(cache, dlogits).0
    }

    /// Like [`NetworkParams::backward`] but also returns dL/d(input), for
    /// callers that chain this network after another differentiable stage.
    pub fn backward_with_input(
        &self,
        cache: &ForwardCache,
        dlogits: &Array2<f64>,
    ) -> (GradBuffers, Array2<f64>) {
        let mut g = dlogits.clone();
        let mut grads: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            if let Some(mask) = &lc.mask {
                g = &g * mask;
            }
            // Through the activation.
            for ((gi, &u), &a) in g.iter_mut().zip(lc.pre_act.iter()).zip(lc.post_act.iter()) {
                *gi *= layer.activation.derivative(u, a);
            }
            // Through the normalization.
            let dnorm = match (&layer.norm, &lc.norm) {
                (Some(Norm::Layer { gamma, .. }), Some(nc)) => {
                    let dgamma = (&g * &nc.x_hat).sum_axis(Axis(0));
                    let dbeta = g.sum_axis(Axis(0));
                    let h = g.ncols() as f64;
                    let mut dz = Array2::zeros(g.dim());
                    for i in 0..g.nrows() {
                        let mut dxhat = Array1::zeros(g.ncols());
                        for j in 0..g.ncols() {
                            dxhat[j] = g[(i, j)] * gamma[j];
                        }
                        let m1 = dxhat.sum() / h;
                        let m2 = dxhat
                            .iter()
                            .zip(nc.x_hat.row(i))
                            .map(|(d, x)| d * x)
                            .sum::<f64>()
                            / h;
                        for j in 0..g.ncols() {
                            dz[(i, j)] = nc.inv_std[i] * (dxhat[j] - m1 - nc.x_hat[(i, j)] * m2);
                        }
                    }
                    g = dz;
                    Some((dgamma, dbeta))
                }
                (Some(Norm::Batch { gamma, .. }), Some(nc)) => {
                    let dgamma = (&g * &nc.x_hat).sum_axis(Axis(0));
                    let dbeta = g.sum_axis(Axis(0));
                    let n = g.nrows() as f64;
                    let mut dz = Array2::zeros(g.dim());
                    for j in 0..g.ncols() {
                        let mut m1 = 0.0;
                        let mut m2 = 0.0;
                        for i in 0..g.nrows() {
                            let dxhat = g[(i, j)] * gamma[j];
                            m1 += dxhat;
                            m2 += dxhat * nc.x_hat[(i, j)];
                        }
                        m1 /= n;
                        m2 /= n;
                        for i in 0..g.nrows() {
                            let dxhat = g[(i, j)] * gamma[j];
                            dz[(i, j)] = nc.inv_std[j] * (dxhat - m1 - nc.x_hat[(i, j)] * m2);
                        }
                    }
                    g = dz;
                    Some((dgamma, dbeta))
                }
                _ => None,
            };
            // Through the affine map.
            let dweight = lc.input.t().dot(&g);
            let dbias = g.sum_axis(Axis(0));
            g = g.dot(&layer.weight.t());
            grads.push(LayerGrads {
                dweight,
                dbias,
                dnorm,
            });
        }
        grads.reverse();
        (GradBuffers { layers: grads }, g)
    }

    /// Refreshes batch-norm running statistics from a training forward pass.
    pub fn apply_batch_stats(&mut self, cache: &ForwardCache) {
        for (layer, lc) in self.layers.iter_mut().zip(&cache.layers) {
            if let (
                Some(Norm::Batch {
                    running_mean,
                    running_var,
                    ..
                }),
                Some(NormCache {
                    batch_stats: Some((mean, var)),
                    ..
                }),
            ) = (&mut layer.norm, &lc.norm)
            {
                running_mean.zip_mut_with(mean, |r, &b| *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * b);
                running_var.zip_mut_with(var, |r, &b| *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * b);
            }
        }
    }

    /// Evaluation-mode class probabilities; requires a two-class network.
    pub fn probabilities(&self, x: &ArrayView2<f64>) -> Result<Vec<ClassProbabilities>> {
        if self.output_dim() != 2 {
            return Err(NnError::Argument(format!(
                "probabilities require 2 output classes, network has {}",
                self.output_dim()
            )));
        }
        let logits = self.forward_eval(x)?;
        logits_to_probs(&logits)
    }

    /// Total number of trainable scalars, used for flat indexing.
    pub fn flat_len(&self) -> usize {
        self.param_count()
    }

    /// Mutable views of every trainable tensor paired with its weight-decay
    /// eligibility (only weight matrices decay). Order matches
    /// [`GradBuffers::tensor_slices`] and [`NetworkParams::perturb`].
    pub fn tensors_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push((layer.weight.as_slice_mut().expect("contiguous"), true));
            out.push((layer.bias.as_slice_mut().expect("contiguous"), false));
            if let Some(norm) = &mut layer.norm {
                match norm {
                    Norm::Layer { gamma, beta } | Norm::Batch { gamma, beta, .. } => {
                        out.push((gamma.as_slice_mut().expect("contiguous"), false));
                        out.push((beta.as_slice_mut().expect("contiguous"), false));
                    }
                }
            }
        }
        out
    }

    /// Adds `delta` to the `flat_index`-th trainable scalar (enumeration
    /// order: per layer, weight row-major, bias, then gamma and beta).
    pub fn perturb(&mut self, flat_index: usize, delta: f64) {
        let mut offset = flat_index;
        for layer in &mut self.layers {
            let w = layer.weight.len();
            if offset < w {
                layer.weight.as_slice_mut().expect("contiguous")[offset] += delta;
                return;
            }
            offset -= w;
            let b = layer.bias.len();
            if offset < b {
                layer.bias[offset] += delta;
                return;
            }
            offset -= b;
            if let Some(norm) = &mut layer.norm {
                let width = norm.width();
                match norm {
                    Norm::Layer { gamma, beta } | Norm::Batch { gamma, beta, .. } => {
                        if offset < width {
                            gamma[offset] += delta;
                            return;
                        }
                        offset -= width;
                        if offset < width {
                            beta[offset] += delta;
                            return;
                        }
                        offset -= width;
                    }
                }
            }
        }
        panic!("flat index {flat_index} out of range");
    }
}

impl GradBuffers {
    /// Gradient tensors in the order of [`NetworkParams::tensors_mut`].
    pub fn tensor_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for lg in &self.layers {
            out.push(lg.dweight.as_slice().expect("contiguous"));
            out.push(lg.dbias.as_slice().expect("contiguous"));
            if let Some((dgamma, dbeta)) = &lg.dnorm {
                out.push(dgamma.as_slice().expect("contiguous"));
                out.push(dbeta.as_slice().expect("contiguous"));
            }
        }
        out
    }

    /// Flattens gradients in the same order as [`NetworkParams::perturb`].
    pub(crate) fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for lg in &self.layers {
            out.extend(lg.dweight.iter());
            out.extend(lg.dbias.iter());
            if let Some((dgamma, dbeta)) = &lg.dnorm {
                out.extend(dgamma.iter());
                out.extend(dbeta.iter());
            }
        }
        out
    }
}

/// Layer norm forward over the feature axis; returns (output, x_hat, per-row
/// inverse std).
fn layer_norm_forward(
    z: &Array2<f64>,
    gamma: &Array1<f64>,
    beta: &Array1<f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    let h = z.ncols() as f64;
    let mut out = z.clone();
    let mut x_hat = z.clone();
    let mut inv_std = Array1::zeros(z.nrows());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let mean = row.sum() / h;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / h;
        let inv = 1.0 / (var + NORM_EPS).sqrt();
        inv_std[i] = inv;
        for j in 0..row.len() {
            let xh = (row[j] - mean) * inv;
            x_hat[(i, j)] = xh;
            row[j] = gamma[j] * xh + beta[j];
        }
    }
    (out, x_hat, inv_std)
}

/// Converts a two-column logit matrix into validated probability pairs.
pub(crate) fn logits_to_probs(logits: &Array2<f64>) -> Result<Vec<ClassProbabilities>> {
    let probs = softmax_rows(logits);
    probs
        .rows()
        .into_iter()
        .map(|row| ClassProbabilities::new(row[0], row[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::xavier_uniform;
    use ndarray::array;
    use rand::SeedableRng;

    fn plain_layer(w: Array2<f64>, activation: Activation) -> FfLayer {
        let out = w.ncols();
        FfLayer {
            weight: w,
            bias: Array1::zeros(out),
            activation,
            norm: None,
            dropout: 0.0,
        }
    }

    #[test]
    fn layer_norm_matches_a_hand_computed_row() {
        // Row [1, 3]: mean 2, var 1 → x_hat = [−1/√(1+ε), 1/√(1+ε)].
        let (out, x_hat, inv) = layer_norm_forward(
            &array![[1.0, 3.0]],
            &Array1::ones(2),
            &Array1::zeros(2),
        );
        let expect = 1.0 / (1.0 + NORM_EPS).sqrt();
        assert!((x_hat[(0, 1)] - expect).abs() < 1e-12);
        assert!((out[(0, 0)] + expect).abs() < 1e-12);
        assert!((inv[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn batch_norm_eval_uses_running_statistics() {
        let mut layer = plain_layer(Array2::eye(2), Activation::Linear);
        layer.norm = Some(Norm::Batch {
            gamma: Array1::ones(2),
            beta: Array1::zeros(2),
            running_mean: array![1.0, 2.0],
            running_var: array![4.0, 9.0],
        });
        let net = NetworkParams {
            layers: vec![layer],
            seed: 0,
        };
        let y = net.forward_eval(&array![[3.0, 5.0]].view()).unwrap();
        assert!((y[(0, 0)] - (3.0 - 1.0) / (4.0f64 + NORM_EPS).sqrt()).abs() < 1e-12);
        assert!((y[(0, 1)] - (5.0 - 2.0) / (9.0f64 + NORM_EPS).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn training_forward_refreshes_running_stats_only_when_applied() {
        let mut layer = plain_layer(Array2::eye(1), Activation::Linear);
        layer.norm = Some(Norm::batch(1));
        let mut net = NetworkParams {
            layers: vec![layer],
            seed: 0,
        };
        let x = array![[2.0], [4.0]];
        let (_, cache) = net.forward_train(&x.view(), None).unwrap();
        // Batch mean 3, biased var 1; momentum 0.1 from (0, 1).
        net.apply_batch_stats(&cache);
        match &net.layers[0].norm {
            Some(Norm::Batch {
                running_mean,
                running_var,
                ..
            }) => {
                assert!((running_mean[0] - 0.3).abs() < 1e-12);
                assert!((running_var[0] - (0.9 + 0.1)).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn dropout_masks_scale_by_inverse_keep_rate() {
        let mut layer = plain_layer(Array2::eye(4), Activation::Linear);
        layer.dropout = 0.5;
        let net = NetworkParams {
            layers: vec![layer],
            seed: 0,
        };
        let x = Array2::ones((64, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (y, _) = net.forward_train(&x.view(), Some(&mut rng)).unwrap();
        let kept: Vec<f64> = y.iter().copied().filter(|v| *v != 0.0).collect();
        assert!(!kept.is_empty() && kept.len() < y.len());
        assert!(kept.iter().all(|&v| (v - 2.0).abs() < 1e-12));
        // Without an RNG the mask is inert.
        let (y2, _) = net.forward_train(&x.view(), None).unwrap();
        assert_eq!(y2, x);
    }

    #[test]
    fn input_width_mismatch_names_expected_and_actual() {
        let net = NetworkParams {
            layers: vec![plain_layer(xavier_uniform(3, 2, 0), Activation::Linear)],
            seed: 0,
        };
        match net.forward_eval(&Array2::zeros((1, 5)).view()) {
            Err(NnError::Shape {
                expected, actual, ..
            }) => {
                assert_eq!((expected, actual), (3, 5));
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn validate_catches_broken_chaining() {
        let net = NetworkParams {
            layers: vec![
                plain_layer(xavier_uniform(3, 4, 0), Activation::Tanh),
                plain_layer(xavier_uniform(5, 2, 1), Activation::Linear),
            ],
            seed: 0,
        };
        assert!(matches!(net.validate(), Err(NnError::Shape { .. })));
    }

    #[test]
    fn perturb_and_flatten_agree_on_ordering() {
        let mut layer = plain_layer(xavier_uniform(2, 3, 1), Activation::Tanh);
        layer.norm = Some(Norm::layer(3));
        let net = NetworkParams {
            layers: vec![layer, plain_layer(xavier_uniform(3, 2, 2), Activation::Linear)],
            seed: 0,
        };
        // flat_len = 2·3 + 3 + 3 + 3 + 3·2 + 2 = 23
        assert_eq!(net.flat_len(), 23);
        let mut probe = net.clone();
        probe.perturb(6, 0.5); // first bias entry of layer 0
        assert!((probe.layers[0].bias[0] - net.layers[0].bias[0] - 0.5).abs() < 1e-15);
        let mut probe = net.clone();
        probe.perturb(9, 0.5); // first gamma entry
        match &probe.layers[0].norm {
            Some(Norm::Layer { gamma, .. }) => assert!((gamma[0] - 1.5).abs() < 1e-15),
            _ => unreachable!(),
        }
    }
}
