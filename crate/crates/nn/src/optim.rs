use serde::{Deserialize, Serialize};

use crate::ffnet::{GradBuffers, NetworkParams};

/// Step rule for mini-batch training. The adaptive rule is Adam with
/// decoupled weight decay (decay applied to weight matrices only, never to
/// biases or normalization parameters); plain SGD is available for the toy
/// examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    AdamW {
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        weight_decay: f64,
    },
    Sgd {
        learning_rate: f64,
    },
}

impl OptimizerKind {
    /// AdamW with the conventional moment defaults and decay 0.01.
    pub fn adamw(learning_rate: f64) -> Self {
        OptimizerKind::AdamW {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        OptimizerKind::Sgd { learning_rate }
    }

    pub fn learning_rate(&self) -> f64 {
        match self {
            OptimizerKind::AdamW { learning_rate, .. } | OptimizerKind::Sgd { learning_rate } => {
                *learning_rate
            }
        }
    }
}

/// Optimizer state: first/second moment buffers per trainable tensor.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, params: &NetworkParams) -> Self {
        let mut lengths = Vec::new();
        for layer in &params.layers {
            lengths.push(layer.weight.len());
            lengths.push(layer.bias.len());
            if let Some(norm) = &layer.norm {
                lengths.push(norm.gamma().len());
                lengths.push(norm.beta().len());
            }
        }
        Self::for_lengths(kind, &lengths)
    }

    /// State for an arbitrary ordered list of flat tensors, identified only
    /// by their lengths. Callers outside this crate use this together with
    /// [`Optimizer::step_slices`] to train their own parameter structures.
    pub fn for_lengths(kind: OptimizerKind, lengths: &[usize]) -> Self {
        Self {
            kind,
            t: 0,
            m: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            v: lengths.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Applies one update step in place. `grads` must come from a backward
    /// pass over the same network structure.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &GradBuffers) {
        let mut tensors = params.tensors_mut();
        let grad_slices = grads.tensor_slices();
        self.step_slices(&mut tensors, &grad_slices);
    }

    /// Core update over flat tensors; each entry pairs the parameter slice
    /// with its weight-decay eligibility. Order and lengths must match the
    /// construction-time tensor list call after call.
    pub fn step_slices(&mut self, tensors: &mut [(&mut [f64], bool)], grads: &[&[f64]]) {
        assert_eq!(tensors.len(), grads.len(), "param/grad tensor mismatch");
        assert_eq!(tensors.len(), self.m.len(), "optimizer state tensor mismatch");
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd { learning_rate } => {
                for ((slice, _), gs) in tensors.iter_mut().zip(grads) {
                    for (w, g) in slice.iter_mut().zip(*gs) {
                        *w -= learning_rate * g;
                    }
                }
            }
            OptimizerKind::AdamW {
                learning_rate,
                beta1,
                beta2,
                epsilon,
                weight_decay,
            } => {
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                for (idx, ((slice, decays), gs)) in tensors.iter_mut().zip(grads).enumerate() {
                    let m = &mut self.m[idx];
                    let v = &mut self.v[idx];
                    for (j, (w, &g)) in slice.iter_mut().zip(*gs).enumerate() {
                        m[j] = beta1 * m[j] + (1.0 - beta1) * g;
                        v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
                        let m_hat = m[j] / bc1;
                        let v_hat = v[j] / bc2;
                        *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                        if *decays {
                            *w -= learning_rate * weight_decay * *w;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::ffnet::{FfLayer, LayerGrads};
    use ndarray::{array, Array1, Array2};

    fn one_param_net(w: f64) -> NetworkParams {
        NetworkParams {
            layers: vec![FfLayer {
                weight: array![[w]],
                bias: Array1::zeros(1),
                activation: Activation::Linear,
                norm: None,
                dropout: 0.0,
            }],
            seed: 0,
        }
    }

    fn grads_of(dweight: f64, dbias: f64) -> GradBuffers {
        GradBuffers {
            layers: vec![LayerGrads {
                dweight: array![[dweight]],
                dbias: array![dbias],
                dnorm: None,
            }],
        }
    }

    #[test]
    fn sgd_step_is_exact() {
        let mut net = one_param_net(2.0);
        let mut opt = Optimizer::new(OptimizerKind::sgd(0.1), &net);
        opt.step(&mut net, &grads_of(3.0, -1.0));
        assert!((net.layers[0].weight[(0, 0)] - (2.0 - 0.3)).abs() < 1e-15);
        assert!((net.layers[0].bias[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn adamw_first_step_matches_the_closed_form() {
        // With zero state, step 1 gives m̂ = g, v̂ = g², so the adaptive part
        // moves by lr·g/(|g|+ε) ≈ lr·sign(g), then decay shrinks the weight.
        let w0 = 2.0;
        let lr = 0.01;
        let g = 3.0;
        let mut net = one_param_net(w0);
        let mut opt = Optimizer::new(OptimizerKind::adamw(lr), &net);
        opt.step(&mut net, &grads_of(g, 0.0));
        let after_adaptive = w0 - lr * g / (g.abs() + 1e-8);
        let expected = after_adaptive - lr * 0.01 * after_adaptive;
        assert!((net.layers[0].weight[(0, 0)] - expected).abs() < 1e-12);
        // Bias had zero gradient and is never decayed: unchanged.
        assert_eq!(net.layers[0].bias[0], 0.0);
    }

    #[test]
    fn decay_touches_weights_but_not_biases_or_norms() {
        let mut net = NetworkParams {
            layers: vec![FfLayer {
                weight: Array2::ones((2, 2)),
                bias: Array1::ones(2),
                activation: Activation::Linear,
                norm: Some(crate::ffnet::Norm::layer(2)),
                dropout: 0.0,
            }],
            seed: 0,
        };
        let zero_grads = GradBuffers {
            layers: vec![LayerGrads {
                dweight: Array2::zeros((2, 2)),
                dbias: Array1::zeros(2),
                dnorm: Some((Array1::zeros(2), Array1::zeros(2))),
            }],
        };
        let mut opt = Optimizer::new(OptimizerKind::adamw(0.1), &net);
        opt.step(&mut net, &zero_grads);
        // Weight: only the decay term applies; everything else untouched.
        assert!((net.layers[0].weight[(0, 0)] - (1.0 - 0.1 * 0.01)).abs() < 1e-12);
        assert_eq!(net.layers[0].bias[0], 1.0);
        assert_eq!(net.layers[0].norm.as_ref().unwrap().gamma()[0], 1.0);
    }

    #[test]
    fn two_sgd_steps_accumulate() {
        let mut net = one_param_net(1.0);
        let mut opt = Optimizer::new(OptimizerKind::sgd(0.5), &net);
        opt.step(&mut net, &grads_of(1.0, 0.0));
        opt.step(&mut net, &grads_of(1.0, 0.0));
        assert!((net.layers[0].weight[(0, 0)] - 0.0).abs() < 1e-15);
    }
}
