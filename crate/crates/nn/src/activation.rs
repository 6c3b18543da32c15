use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

/// Element-wise activation applied inside a dense layer. The final softmax
/// is not a layer activation; it is applied once over the network's output
/// logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative with respect to the pre-activation, written in terms of
    /// the pre-activation `x` and the already-computed output `y`.
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(Activation::Linear),
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Gaussian error linear unit (exact erf form), used by the transformer
/// encoder feed-forward blocks.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Derivative of [`gelu`].
pub fn gelu_prime(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

/// Abramowitz–Stegun 7.1.26 rational approximation of erf, accurate to
/// ~1.5e-7 — far below every gradient tolerance in this workspace.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
            + 0.254829592)
            * t
            * (-x * x).exp();
    sign * y
}

/// Numerically stable log(Σ exp(z_i)).
pub fn log_sum_exp(logits: ArrayView1<f64>) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

/// Row-wise stable softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|e| e / sum);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn gelu_reference_values() {
        assert_eq!(gelu(0.0), 0.0);
        // Reference value of x·Φ(x) at x=1: 0.8413447460685429…
        assert!((gelu(1.0) - 0.841344746).abs() < 1e-6);
        assert!((gelu(-1.0) + 0.158655254).abs() < 1e-6);
        // Large |x| saturates to x or 0.
        assert!((gelu(6.0) - 6.0).abs() < 1e-8);
        assert!(gelu(-6.0).abs() < 1e-8);
    }

    #[test]
    fn activation_derivatives_match_finite_differences() {
        let eps = 1e-6;
        for act in [Activation::Linear, Activation::Tanh, Activation::Relu] {
            for &x in &[-1.7, -0.3, 0.4, 2.1] {
                let fd = (act.apply(x + eps) - act.apply(x - eps)) / (2.0 * eps);
                let an = act.derivative(x, act.apply(x));
                assert!((fd - an).abs() < 1e-6, "{act:?} at {x}");
            }
        }
        for &x in &[-2.0, -0.5, 0.25, 1.5] {
            let fd = (gelu(x + eps) - gelu(x - eps)) / (2.0 * eps);
            assert!((fd - gelu_prime(x)).abs() < 1e-5, "gelu' at {x}");
        }
    }

    #[test]
    fn softmax_rows_are_probability_vectors() {
        let p = softmax_rows(&array![[1.0, 2.0, 3.0], [-1000.0, 0.0, 1000.0]]);
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    proptest! {
        #[test]
        fn softmax_is_shift_invariant(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0) {
            let base = softmax_rows(&array![[a, b]]);
            let shifted = softmax_rows(&array![[a + c, b + c]]);
            prop_assert!((base[(0, 0)] - shifted[(0, 0)]).abs() < 1e-9);
            prop_assert!((base[(0, 1)] - shifted[(0, 1)]).abs() < 1e-9);
        }

        #[test]
        fn log_sum_exp_matches_naive_when_safe(a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let stable = log_sum_exp(array![a, b].view());
            let naive = (a.exp() + b.exp()).ln();
            prop_assert!((stable - naive).abs() < 1e-9);
        }
    }
}
