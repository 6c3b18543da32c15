//! Finite-difference oracle for the transformer encoder's hand-written
//! backward pass. The loss here is recomputed from scratch (pooling, a fixed
//! linear readout, cross-entropy through log-sum-exp) so the analytic
//! gradients are checked against an independent straight-line computation.

use fakestack_backbones::{
    pool, pool_backward, EncoderConfig, EncoderGrads, EncoderParams, Pooling,
};
use ndarray::Array2;

const EPSILON: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;
/// Central differences divide ~1e-13 of floating-point noise in the loss by
/// 2ε, so numeric gradients carry absolute noise up to ~1e-7; components
/// smaller than that cannot be resolved relatively and are compared
/// absolutely instead.
const ABS_NOISE: f64 = 2e-7;

fn tiny_config() -> EncoderConfig {
    EncoderConfig {
        vocab_size: 12,
        d_model: 8,
        n_heads: 2,
        n_layers: 2,
        d_ff: 10,
        max_positions: 6,
    }
}

/// Deterministic pseudo-random readout matrix (d_model × 2).
fn readout(d: usize, scale: f64) -> Array2<f64> {
    let mut state = 0x1234_5678_u64;
    Array2::from_shape_simple_fn((d, 2), move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        scale * (((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0)
    })
}

fn scalar_loss(
    params: &EncoderParams,
    ids: &[usize],
    mask: &[bool],
    readout: &Array2<f64>,
    gold: usize,
    pooling: Pooling,
) -> f64 {
    let hidden = params.encode_sequence(ids, mask).unwrap();
    let pooled = pool(&hidden, mask, pooling);
    let mut logits = [0.0_f64; 2];
    for c in 0..2 {
        for j in 0..pooled.len() {
            logits[c] += pooled[j] * readout[(j, c)];
        }
    }
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[gold]
}

fn check_pooling(pooling: Pooling, seed: u64) -> f64 {
    let params = EncoderParams::init(tiny_config(), seed).unwrap();
    let ids = [1_usize, 5, 9, 11, 0];
    let mask = [true, true, true, true, false];
    let gold = 1;
    let read = readout(8, 0.7);

    // Analytic gradients through the library's backward pass.
    let (hidden, cache) = params.forward_train(&ids, &mask).unwrap();
    let pooled = pool(&hidden, &mask, pooling);
    let mut logits = [0.0_f64; 2];
    for c in 0..2 {
        for j in 0..pooled.len() {
            logits[c] += pooled[j] * read[(j, c)];
        }
    }
    let m = logits[0].max(logits[1]);
    let z: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let sum: f64 = z.iter().sum();
    let mut dlogits = [z[0] / sum, z[1] / sum];
    dlogits[gold] -= 1.0;
    let mut dpooled = ndarray::Array1::zeros(8);
    for j in 0..8 {
        dpooled[j] = read[(j, 0)] * dlogits[0] + read[(j, 1)] * dlogits[1];
    }
    let dhidden = pool_backward(&dpooled, ids.len(), &mask, pooling);
    let mut grads = EncoderGrads::zeros_like(&params);
    params.backward_into(&cache, &dhidden, &mut grads);
    let analytic = grads.flatten();
    assert_eq!(analytic.len(), params.flat_len());

    // Independent central differences.
    let mut worst = 0.0_f64;
    for idx in 0..params.flat_len() {
        let mut plus = params.clone();
        plus.perturb(idx, EPSILON);
        let mut minus = params.clone();
        minus.perturb(idx, -EPSILON);
        let numeric = (scalar_loss(&plus, &ids, &mask, &read, gold, pooling)
            - scalar_loss(&minus, &ids, &mask, &read, gold, pooling))
            / (2.0 * EPSILON);
        let abs_err = (analytic[idx] - numeric).abs();
        let denom = analytic[idx].abs().max(numeric.abs());
        let err = if denom > 0.0 { abs_err / denom } else { 0.0 };
        assert!(
            abs_err < ABS_NOISE || err < TOLERANCE,
            "{pooling:?} flat index {idx}: analytic {} vs numeric {} (abs {abs_err}, rel {err})",
            analytic[idx],
            numeric
        );
        if denom >= 1e-3 {
            worst = worst.max(err);
        }
    }
    worst
}

#[test]
fn first_token_pooling_gradients_match_finite_differences() {
    check_pooling(Pooling::FirstToken, 11);
}

#[test]
fn last_token_pooling_gradients_match_finite_differences() {
    check_pooling(Pooling::LastToken, 22);
}

#[test]
fn mean_pooling_gradients_match_finite_differences() {
    check_pooling(Pooling::Mean, 33);
}

#[test]
fn padding_positions_receive_exactly_zero_gradient() {
    let params = EncoderParams::init(tiny_config(), 5).unwrap();
    let ids = [1_usize, 5, 0, 0];
    let mask = [true, true, false, false];
    let read = readout(8, 0.5);
    let (hidden, cache) = params.forward_train(&ids, &mask).unwrap();
    let pooled = pool(&hidden, &mask, Pooling::Mean);
    let mut dpooled = ndarray::Array1::zeros(8);
    for j in 0..8 {
        dpooled[j] = read[(j, 0)] - pooled[j];
    }
    let dhidden = pool_backward(&dpooled, ids.len(), &mask, Pooling::Mean);
    let mut grads = EncoderGrads::zeros_like(&params);
    params.backward_into(&cache, &dhidden, &mut grads);
    // Positions 2 and 3 are padding: their position-embedding rows must stay
    // exactly zero, as must the padding token's embedding row.
    for t in 2..4 {
        for j in 0..8 {
            assert_eq!(grads.dposition_embedding[(t, j)], 0.0);
        }
    }
    for j in 0..8 {
        assert_eq!(grads.dtoken_embedding[(0, j)], 0.0);
    }
}
