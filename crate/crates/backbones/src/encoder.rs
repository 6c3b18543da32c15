//! A miniature pre-norm transformer encoder with hand-written backward
//! passes, used both as the small-proxy stand-in for each backbone family
//! and as the container format for imported base-class weights.

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fakestack_nn::{derive_seed, gelu, gelu_prime, xavier_uniform};

use crate::registry::Pooling;
use crate::{BackboneError, Result};

/// Epsilon inside layer-norm denominators.
pub const LN_EPS: f64 = 1e-5;

/// Architecture of one encoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub max_positions: usize,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 || self.n_layers == 0 || self.d_ff == 0 {
            return Err(BackboneError::Argument(
                "encoder dimensions must all be ≥ 1".into(),
            ));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(BackboneError::Argument(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.vocab_size < 4 {
            return Err(BackboneError::Argument(format!(
                "vocab_size {} too small for the reserved special tokens",
                self.vocab_size
            )));
        }
        if self.max_positions == 0 {
            return Err(BackboneError::Argument("max_positions must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// One pre-norm block: x += attention(ln1(x)); x += feed_forward(ln2(x)).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderBlock {
    pub ln1_gamma: Array1<f64>,
    pub ln1_beta: Array1<f64>,
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ln2_gamma: Array1<f64>,
    pub ln2_beta: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Full encoder parameters: embeddings, blocks, and the final layer norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub token_embedding: Array2<f64>,
    pub position_embedding: Array2<f64>,
    pub blocks: Vec<EncoderBlock>,
    pub final_gamma: Array1<f64>,
    pub final_beta: Array1<f64>,
    pub seed: u64,
}

struct BlockCache {
    ln1_xhat: Array2<f64>,
    ln1_inv: Array1<f64>,
    ln1_out: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    att: Vec<Array2<f64>>,
    ctx: Array2<f64>,
    ln2_xhat: Array2<f64>,
    ln2_inv: Array1<f64>,
    ln2_out: Array2<f64>,
    z1: Array2<f64>,
    a1: Array2<f64>,
}

/// Everything the backward pass needs from one sequence's forward pass.
pub struct SequenceCache {
    ids: Vec<usize>,
    mask: Vec<bool>,
    blocks: Vec<BlockCache>,
    final_xhat: Array2<f64>,
    final_inv: Array1<f64>,
}

/// Gradients for one block, shaped like the block.
#[derive(Debug, Clone)]
pub struct BlockGrads {
    pub dln1_gamma: Array1<f64>,
    pub dln1_beta: Array1<f64>,
    pub dwq: Array2<f64>,
    pub dbq: Array1<f64>,
    pub dwk: Array2<f64>,
    pub dbk: Array1<f64>,
    pub dwv: Array2<f64>,
    pub dbv: Array1<f64>,
    pub dwo: Array2<f64>,
    pub dbo: Array1<f64>,
    pub dln2_gamma: Array1<f64>,
    pub dln2_beta: Array1<f64>,
    pub dw1: Array2<f64>,
    pub db1: Array1<f64>,
    pub dw2: Array2<f64>,
    pub db2: Array1<f64>,
}

/// Accumulated encoder gradients (token embeddings are dense buffers; rows
/// for ids that never occurred stay zero).
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub dtoken_embedding: Array2<f64>,
    pub dposition_embedding: Array2<f64>,
    pub blocks: Vec<BlockGrads>,
    pub dfinal_gamma: Array1<f64>,
    pub dfinal_beta: Array1<f64>,
}

/// Row-wise layer norm; returns (out, x_hat, inverse std per row).
fn ln_rows(
    x: &Array2<f64>,
    gamma: &Array1<f64>,
    beta: &Array1<f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    let d = x.ncols() as f64;
    let mut out = x.clone();
    let mut x_hat = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let mean = row.sum() / d;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        inv_std[i] = inv;
        for j in 0..row.len() {
            let xh = (row[j] - mean) * inv;
            x_hat[(i, j)] = xh;
            row[j] = gamma[j] * xh + beta[j];
        }
    }
    (out, x_hat, inv_std)
}

/// Backward of [`ln_rows`]: maps d(out) to d(x) given the cached
/// normalization state. Also accumulates dgamma/dbeta.
fn ln_rows_backward(
    dout: &Array2<f64>,
    x_hat: &Array2<f64>,
    inv_std: &Array1<f64>,
    gamma: &Array1<f64>,
    dgamma: &mut Array1<f64>,
    dbeta: &mut Array1<f64>,
) -> Array2<f64> {
    let d = dout.ncols() as f64;
    let mut dx = Array2::zeros(dout.dim());
    for i in 0..dout.nrows() {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for j in 0..dout.ncols() {
            let g = dout[(i, j)];
            dgamma[j] += g * x_hat[(i, j)];
            dbeta[j] += g;
            let dxhat = g * gamma[j];
            m1 += dxhat;
            m2 += dxhat * x_hat[(i, j)];
        }
        m1 /= d;
        m2 /= d;
        for j in 0..dout.ncols() {
            let dxhat = dout[(i, j)] * gamma[j];
            dx[(i, j)] = inv_std[i] * (dxhat - m1 - x_hat[(i, j)] * m2);
        }
    }
    dx
}

impl EncoderParams {
    /// Deterministic initialization: Xavier-uniform matrices, zero biases,
    /// identity layer norms. Each tensor draws from its own seed stream.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let mut stream = 0u64;
        let mut next = |fan_in: usize, fan_out: usize| {
            let m = xavier_uniform(fan_in, fan_out, derive_seed(seed, stream));
            stream += 1;
            m
        };
        let token_embedding = next(config.vocab_size, d);
        let position_embedding = next(config.max_positions, d);
        let blocks = (0..config.n_layers)
            .map(|_| EncoderBlock {
                ln1_gamma: Array1::ones(d),
                ln1_beta: Array1::zeros(d),
                wq: next(d, d),
                bq: Array1::zeros(d),
                wk: next(d, d),
                bk: Array1::zeros(d),
                wv: next(d, d),
                bv: Array1::zeros(d),
                wo: next(d, d),
                bo: Array1::zeros(d),
                ln2_gamma: Array1::ones(d),
                ln2_beta: Array1::zeros(d),
                w1: next(d, config.d_ff),
                b1: Array1::zeros(config.d_ff),
                w2: next(config.d_ff, d),
                b2: Array1::zeros(d),
            })
            .collect();
        Ok(Self {
            config,
            token_embedding,
            position_embedding,
            blocks,
            final_gamma: Array1::ones(d),
            final_beta: Array1::zeros(d),
            seed,
        })
    }

    /// All-zero parameters of the right shapes, to be filled from a
    /// checkpoint.
    pub fn zeros(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let blocks = (0..config.n_layers)
            .map(|_| EncoderBlock {
                ln1_gamma: Array1::zeros(d),
                ln1_beta: Array1::zeros(d),
                wq: Array2::zeros((d, d)),
                bq: Array1::zeros(d),
                wk: Array2::zeros((d, d)),
                bk: Array1::zeros(d),
                wv: Array2::zeros((d, d)),
                bv: Array1::zeros(d),
                wo: Array2::zeros((d, d)),
                bo: Array1::zeros(d),
                ln2_gamma: Array1::zeros(d),
                ln2_beta: Array1::zeros(d),
                w1: Array2::zeros((d, config.d_ff)),
                b1: Array1::zeros(config.d_ff),
                w2: Array2::zeros((config.d_ff, d)),
                b2: Array1::zeros(d),
            })
            .collect();
        Ok(Self {
            config,
            token_embedding: Array2::zeros((config.vocab_size, d)),
            position_embedding: Array2::zeros((config.max_positions, d)),
            blocks,
            final_gamma: Array1::zeros(d),
            final_beta: Array1::zeros(d),
            seed,
        })
    }

    pub fn hidden_width(&self) -> usize {
        self.config.d_model
    }

    fn check_sequence(&self, ids: &[usize], mask: &[bool]) -> Result<()> {
        if ids.is_empty() {
            return Err(BackboneError::Argument("empty token sequence".into()));
        }
        if ids.len() != mask.len() {
            return Err(BackboneError::Argument(format!(
                "ids/mask length mismatch: {} vs {}",
                ids.len(),
                mask.len()
            )));
        }
        if ids.len() > self.config.max_positions {
            return Err(BackboneError::Argument(format!(
                "sequence length {} exceeds max_positions {}",
                ids.len(),
                self.config.max_positions
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.config.vocab_size) {
            return Err(BackboneError::Argument(format!(
                "token id {bad} outside vocabulary of size {}",
                self.config.vocab_size
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(BackboneError::Argument(
                "attention mask has no unmasked position".into(),
            ));
        }
        Ok(())
    }

    fn run(
        &self,
        ids: &[usize],
        mask: &[bool],
        want_cache: bool,
    ) -> Result<(Array2<f64>, Option<SequenceCache>)> {
        self.check_sequence(ids, mask)?;
        let t_len = ids.len();
        let d = self.config.d_model;
        let n_heads = self.config.n_heads;
        let dh = d / n_heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let mut x = Array2::zeros((t_len, d));
        for (t, &id) in ids.iter().enumerate() {
            for j in 0..d {
                x[(t, j)] = self.token_embedding[(id, j)] + self.position_embedding[(t, j)];
            }
        }

        let mut block_caches = Vec::new();
        for block in &self.blocks {
            let (ln1_out, ln1_xhat, ln1_inv) = ln_rows(&x, &block.ln1_gamma, &block.ln1_beta);
            let q = ln1_out.dot(&block.wq) + &block.bq;
            let k = ln1_out.dot(&block.wk) + &block.bk;
            let v = ln1_out.dot(&block.wv) + &block.bv;

            let mut ctx = Array2::zeros((t_len, d));
            let mut att = Vec::with_capacity(n_heads);
            for h in 0..n_heads {
                let cols = h * dh..(h + 1) * dh;
                let qh = q.slice(s![.., cols.clone()]);
                let kh = k.slice(s![.., cols.clone()]);
                let vh = v.slice(s![.., cols.clone()]);
                let mut scores = qh.dot(&kh.t());
                scores.mapv_inplace(|s| s * scale);
                // Masked softmax per query row: padding keys get exactly
                // zero weight, so batch padding never leaks into real rows.
                let mut weights = Array2::zeros((t_len, t_len));
                for i in 0..t_len {
                    let mut max = f64::NEG_INFINITY;
                    for j in 0..t_len {
                        if mask[j] && scores[(i, j)] > max {
                            max = scores[(i, j)];
                        }
                    }
                    let mut sum = 0.0;
                    for j in 0..t_len {
                        if mask[j] {
                            let e = (scores[(i, j)] - max).exp();
                            weights[(i, j)] = e;
                            sum += e;
                        }
                    }
                    for j in 0..t_len {
                        weights[(i, j)] /= sum;
                    }
                }
                let ctx_h = weights.dot(&vh);
                ctx.slice_mut(s![.., cols]).assign(&ctx_h);
                att.push(weights);
            }
            let attn_out = ctx.dot(&block.wo) + &block.bo;
            let h_mid = &x + &attn_out;

            let (ln2_out, ln2_xhat, ln2_inv) =
                ln_rows(&h_mid, &block.ln2_gamma, &block.ln2_beta);
            let z1 = ln2_out.dot(&block.w1) + &block.b1;
            let a1 = z1.mapv(gelu);
            let ff = a1.dot(&block.w2) + &block.b2;
            let x_out = &h_mid + &ff;

            if want_cache {
                block_caches.push(BlockCache {
                    ln1_xhat,
                    ln1_inv,
                    ln1_out,
                    q,
                    k,
                    v,
                    att,
                    ctx,
                    ln2_xhat,
                    ln2_inv,
                    ln2_out,
                    z1,
                    a1,
                });
            }
            x = x_out;
        }

        let (hidden, final_xhat, final_inv) = ln_rows(&x, &self.final_gamma, &self.final_beta);
        let cache = want_cache.then(|| SequenceCache {
            ids: ids.to_vec(),
            mask: mask.to_vec(),
            blocks: block_caches,
            final_xhat,
            final_inv,
        });
        Ok((hidden, cache))
    }

    /// Evaluation forward pass: per-token hidden states (T×d_model).
    pub fn encode_sequence(&self, ids: &[usize], mask: &[bool]) -> Result<Array2<f64>> {
        Ok(self.run(ids, mask, false)?.0)
    }

    /// Forward pass that also returns the cache needed by
    /// [`EncoderParams::backward_into`].
    pub fn forward_train(
        &self,
        ids: &[usize],
        mask: &[bool],
    ) -> Result<(Array2<f64>, SequenceCache)> {
        let (hidden, cache) = self.run(ids, mask, true)?;
        Ok((hidden, cache.expect("cache requested")))
    }

    /// Backward pass for one sequence: accumulates parameter gradients into
    /// `grads` given dL/d(hidden states).
    pub fn backward_into(
        &self,
        cache: &SequenceCache,
        dhidden: &Array2<f64>,
        grads: &mut EncoderGrads,
    ) {
        let d = self.config.d_model;
        let n_heads = self.config.n_heads;
        let dh = d / n_heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let t_len = cache.ids.len();

        let mut g = ln_rows_backward(
            dhidden,
            &cache.final_xhat,
            &cache.final_inv,
            &self.final_gamma,
            &mut grads.dfinal_gamma,
            &mut grads.dfinal_beta,
        );

        for (block, (bc, bg)) in self
            .blocks
            .iter()
            .zip(cache.blocks.iter().zip(grads.blocks.iter_mut()))
            .rev()
        {
            // Feed-forward branch: x_out = h_mid + a1·W2 + b2.
            let dff = &g;
            bg.dw2 += &bc.a1.t().dot(dff);
            bg.db2 += &dff.sum_axis(ndarray::Axis(0));
            let da1 = dff.dot(&block.w2.t());
            let mut dz1 = da1;
            dz1.zip_mut_with(&bc.z1, |dv, &z| *dv *= gelu_prime(z));
            bg.dw1 += &bc.ln2_out.t().dot(&dz1);
            bg.db1 += &dz1.sum_axis(ndarray::Axis(0));
            let dln2out = dz1.dot(&block.w1.t());
            let dh_via_ln2 = ln_rows_backward(
                &dln2out,
                &bc.ln2_xhat,
                &bc.ln2_inv,
                &block.ln2_gamma,
                &mut bg.dln2_gamma,
                &mut bg.dln2_beta,
            );
            let dh_mid = &g + &dh_via_ln2;

            // Attention branch: h_mid = x_in + ctx·Wo + bo.
            bg.dwo += &bc.ctx.t().dot(&dh_mid);
            bg.dbo += &dh_mid.sum_axis(ndarray::Axis(0));
            let dctx = dh_mid.dot(&block.wo.t());

            let mut dq = Array2::zeros((t_len, d));
            let mut dk = Array2::zeros((t_len, d));
            let mut dv = Array2::zeros((t_len, d));
            for h in 0..n_heads {
                let cols = h * dh..(h + 1) * dh;
                let dctx_h = dctx.slice(s![.., cols.clone()]);
                let weights = &bc.att[h];
                let vh = bc.v.slice(s![.., cols.clone()]);
                let qh = bc.q.slice(s![.., cols.clone()]);
                let kh = bc.k.slice(s![.., cols.clone()]);

                let da = dctx_h.dot(&vh.t());
                dv.slice_mut(s![.., cols.clone()])
                    .assign(&weights.t().dot(&dctx_h));

                // Softmax backward per row; masked keys have weight exactly
                // zero and therefore zero score gradient.
                let mut ds = Array2::zeros((t_len, t_len));
                for i in 0..t_len {
                    let dot: f64 = (0..t_len).map(|j| weights[(i, j)] * da[(i, j)]).sum();
                    for j in 0..t_len {
                        ds[(i, j)] = weights[(i, j)] * (da[(i, j)] - dot) * scale;
                    }
                }
                dq.slice_mut(s![.., cols.clone()]).assign(&ds.dot(&kh));
                dk.slice_mut(s![.., cols]).assign(&ds.t().dot(&qh));
            }

            bg.dwq += &bc.ln1_out.t().dot(&dq);
            bg.dbq += &dq.sum_axis(ndarray::Axis(0));
            bg.dwk += &bc.ln1_out.t().dot(&dk);
            bg.dbk += &dk.sum_axis(ndarray::Axis(0));
            bg.dwv += &bc.ln1_out.t().dot(&dv);
            bg.dbv += &dv.sum_axis(ndarray::Axis(0));
            let dln1out = dq.dot(&block.wq.t()) + dk.dot(&block.wk.t()) + dv.dot(&block.wv.t());
            let dx_via_ln1 = ln_rows_backward(
                &dln1out,
                &bc.ln1_xhat,
                &bc.ln1_inv,
                &block.ln1_gamma,
                &mut bg.dln1_gamma,
                &mut bg.dln1_beta,
            );
            g = dh_mid + dx_via_ln1;
        }

        for (t, (&id, &m)) in cache.ids.iter().zip(&cache.mask).enumerate() {
            if m {
                for j in 0..d {
                    grads.dtoken_embedding[(id, j)] += g[(t, j)];
                    grads.dposition_embedding[(t, j)] += g[(t, j)];
                }
            }
        }
    }
}

impl EncoderGrads {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        let d = params.config.d_model;
        Self {
            dtoken_embedding: Array2::zeros(params.token_embedding.dim()),
            dposition_embedding: Array2::zeros(params.position_embedding.dim()),
            blocks: params
                .blocks
                .iter()
                .map(|_| BlockGrads {
                    dln1_gamma: Array1::zeros(d),
                    dln1_beta: Array1::zeros(d),
                    dwq: Array2::zeros((d, d)),
                    dbq: Array1::zeros(d),
                    dwk: Array2::zeros((d, d)),
                    dbk: Array1::zeros(d),
                    dwv: Array2::zeros((d, d)),
                    dbv: Array1::zeros(d),
                    dwo: Array2::zeros((d, d)),
                    dbo: Array1::zeros(d),
                    dln2_gamma: Array1::zeros(d),
                    dln2_beta: Array1::zeros(d),
                    dw1: Array2::zeros((d, params.config.d_ff)),
                    db1: Array1::zeros(params.config.d_ff),
                    dw2: Array2::zeros((params.config.d_ff, d)),
                    db2: Array1::zeros(d),
                })
                .collect(),
            dfinal_gamma: Array1::zeros(d),
            dfinal_beta: Array1::zeros(d),
        }
    }

    /// Gradient slices in the enumeration order of
    /// [`EncoderParams::tensors_mut`].
    pub fn tensor_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        out.push(self.dtoken_embedding.as_slice().expect("contiguous"));
        out.push(self.dposition_embedding.as_slice().expect("contiguous"));
        for b in &self.blocks {
            out.push(b.dln1_gamma.as_slice().expect("contiguous"));
            out.push(b.dln1_beta.as_slice().expect("contiguous"));
            out.push(b.dwq.as_slice().expect("contiguous"));
            out.push(b.dbq.as_slice().expect("contiguous"));
            out.push(b.dwk.as_slice().expect("contiguous"));
            out.push(b.dbk.as_slice().expect("contiguous"));
            out.push(b.dwv.as_slice().expect("contiguous"));
            out.push(b.dbv.as_slice().expect("contiguous"));
            out.push(b.dwo.as_slice().expect("contiguous"));
            out.push(b.dbo.as_slice().expect("contiguous"));
            out.push(b.dln2_gamma.as_slice().expect("contiguous"));
            out.push(b.dln2_beta.as_slice().expect("contiguous"));
            out.push(b.dw1.as_slice().expect("contiguous"));
            out.push(b.db1.as_slice().expect("contiguous"));
            out.push(b.dw2.as_slice().expect("contiguous"));
            out.push(b.db2.as_slice().expect("contiguous"));
        }
        out.push(self.dfinal_gamma.as_slice().expect("contiguous"));
        out.push(self.dfinal_beta.as_slice().expect("contiguous"));
        out
    }

    /// Flattens all gradients in enumeration order (matches
    /// [`EncoderParams::perturb`] indices).
    pub fn flatten(&self) -> Vec<f64> {
        self.tensor_slices().concat()
    }
}

/// Pools per-token hidden states (T×d) into one vector per the mode; only
/// unmasked positions participate.
pub fn pool(hidden: &Array2<f64>, mask: &[bool], pooling: Pooling) -> Array1<f64> {
    match pooling {
        Pooling::FirstToken => hidden.row(0).to_owned(),
        Pooling::LastToken => {
            let last = mask.iter().rposition(|&m| m).expect("non-empty mask");
            hidden.row(last).to_owned()
        }
        Pooling::Mean => {
            let mut acc = Array1::zeros(hidden.ncols());
            let mut n = 0.0;
            for (t, &m) in mask.iter().enumerate() {
                if m {
                    acc += &hidden.row(t);
                    n += 1.0;
                }
            }
            acc / n
        }
    }
}

/// Backward of [`pool`]: spreads d(pooled) back over the hidden states.
pub fn pool_backward(
    dpooled: &Array1<f64>,
    t_len: usize,
    mask: &[bool],
    pooling: Pooling,
) -> Array2<f64> {
    let mut dhidden = Array2::zeros((t_len, dpooled.len()));
    match pooling {
        Pooling::FirstToken => dhidden.row_mut(0).assign(dpooled),
        Pooling::LastToken => {
            let last = mask.iter().rposition(|&m| m).expect("non-empty mask");
            dhidden.row_mut(last).assign(dpooled);
        }
        Pooling::Mean => {
            let n = mask.iter().filter(|&&m| m).count() as f64;
            for (t, &m) in mask.iter().enumerate() {
                if m {
                    dhidden.row_mut(t).assign(&(dpooled / n));
                }
            }
        }
    }
    dhidden
}

/// Canonical tensor enumeration: (name, shape, decay-eligible). Everything
/// that serializes, fingerprints, perturbs, or optimizes the encoder shares
/// this order.
impl EncoderParams {
    pub fn named_shapes(&self) -> Vec<(String, Vec<usize>, bool)> {
        let mut out = vec![
            (
                "token_embedding".to_string(),
                self.token_embedding.shape().to_vec(),
                true,
            ),
            (
                "position_embedding".to_string(),
                self.position_embedding.shape().to_vec(),
                true,
            ),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            let named = [
                ("ln1_gamma", b.ln1_gamma.shape(), false),
                ("ln1_beta", b.ln1_beta.shape(), false),
                ("wq", b.wq.shape(), true),
                ("bq", b.bq.shape(), false),
                ("wk", b.wk.shape(), true),
                ("bk", b.bk.shape(), false),
                ("wv", b.wv.shape(), true),
                ("bv", b.bv.shape(), false),
                ("wo", b.wo.shape(), true),
                ("bo", b.bo.shape(), false),
                ("ln2_gamma", b.ln2_gamma.shape(), false),
                ("ln2_beta", b.ln2_beta.shape(), false),
                ("w1", b.w1.shape(), true),
                ("b1", b.b1.shape(), false),
                ("w2", b.w2.shape(), true),
                ("b2", b.b2.shape(), false),
            ];
            for (name, shape, decay) in named {
                out.push((format!("block{i}.{name}"), shape.to_vec(), decay));
            }
        }
        out.push((
            "final_gamma".to_string(),
            self.final_gamma.shape().to_vec(),
            false,
        ));
        out.push((
            "final_beta".to_string(),
            self.final_beta.shape().to_vec(),
            false,
        ));
        out
    }

    /// Immutable tensor slices in enumeration order.
    pub fn tensor_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        out.push(self.token_embedding.as_slice().expect("contiguous"));
        out.push(self.position_embedding.as_slice().expect("contiguous"));
        for b in &self.blocks {
            out.push(b.ln1_gamma.as_slice().expect("contiguous"));
            out.push(b.ln1_beta.as_slice().expect("contiguous"));
            out.push(b.wq.as_slice().expect("contiguous"));
            out.push(b.bq.as_slice().expect("contiguous"));
            out.push(b.wk.as_slice().expect("contiguous"));
            out.push(b.bk.as_slice().expect("contiguous"));
            out.push(b.wv.as_slice().expect("contiguous"));
            out.push(b.bv.as_slice().expect("contiguous"));
            out.push(b.wo.as_slice().expect("contiguous"));
            out.push(b.bo.as_slice().expect("contiguous"));
            out.push(b.ln2_gamma.as_slice().expect("contiguous"));
            out.push(b.ln2_beta.as_slice().expect("contiguous"));
            out.push(b.w1.as_slice().expect("contiguous"));
            out.push(b.b1.as_slice().expect("contiguous"));
            out.push(b.w2.as_slice().expect("contiguous"));
            out.push(b.b2.as_slice().expect("contiguous"));
        }
        out.push(self.final_gamma.as_slice().expect("contiguous"));
        out.push(self.final_beta.as_slice().expect("contiguous"));
        out
    }

    /// Mutable tensor slices with decay eligibility, in enumeration order.
    pub fn tensors_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        let mut out: Vec<(&mut [f64], bool)> = Vec::new();
        out.push((self.token_embedding.as_slice_mut().expect("contiguous"), true));
        out.push((
            self.position_embedding.as_slice_mut().expect("contiguous"),
            true,
        ));
        for b in &mut self.blocks {
            out.push((b.ln1_gamma.as_slice_mut().expect("contiguous"), false));
            out.push((b.ln1_beta.as_slice_mut().expect("contiguous"), false));
            out.push((b.wq.as_slice_mut().expect("contiguous"), true));
            out.push((b.bq.as_slice_mut().expect("contiguous"), false));
            out.push((b.wk.as_slice_mut().expect("contiguous"), true));
            out.push((b.bk.as_slice_mut().expect("contiguous"), false));
            out.push((b.wv.as_slice_mut().expect("contiguous"), true));
            out.push((b.bv.as_slice_mut().expect("contiguous"), false));
            out.push((b.wo.as_slice_mut().expect("contiguous"), true));
            out.push((b.bo.as_slice_mut().expect("contiguous"), false));
            out.push((b.ln2_gamma.as_slice_mut().expect("contiguous"), false));
            out.push((b.ln2_beta.as_slice_mut().expect("contiguous"), false));
            out.push((b.w1.as_slice_mut().expect("contiguous"), true));
            out.push((b.b1.as_slice_mut().expect("contiguous"), false));
            out.push((b.w2.as_slice_mut().expect("contiguous"), true));
            out.push((b.b2.as_slice_mut().expect("contiguous"), false));
        }
        out.push((self.final_gamma.as_slice_mut().expect("contiguous"), false));
        out.push((self.final_beta.as_slice_mut().expect("contiguous"), false));
        out
    }

    /// Total scalar count across all tensors.
    pub fn flat_len(&self) -> usize {
        self.tensor_slices().iter().map(|s| s.len()).sum()
    }

    /// Adds `delta` to the flat_index-th scalar in enumeration order.
    pub fn perturb(&mut self, flat_index: usize, delta: f64) {
        let mut offset = flat_index;
        for (slice, _) in self.tensors_mut() {
            if offset < slice.len() {
                slice[offset] += delta;
                return;
            }
            offset -= slice.len();
        }
        panic!("flat index {flat_index} out of range");
    }

    /// Content hash over the architecture and every parameter byte.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(
            serde_json::to_string(&self.config)
                .expect("config serializes")
                .as_bytes(),
        );
        let shapes = self.named_shapes();
        for ((name, shape, _), slice) in shapes.iter().zip(self.tensor_slices()) {
            hasher.update(name.as_bytes());
            for dim in shape {
                hasher.update((*dim as u64).to_le_bytes());
            }
            for v in slice {
                hasher.update(v.to_le_bytes());
            }
        }
        hex_string(&hasher.finalize())
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> EncoderParams {
        EncoderParams::init(
            EncoderConfig {
                vocab_size: 16,
                d_model: 8,
                n_heads: 2,
                n_layers: 1,
                d_ff: 12,
                max_positions: 6,
            },
            7,
        )
        .unwrap()
    }

    #[test]
    fn padding_length_never_changes_real_token_states() {
        let enc = tiny();
        let short = enc.encode_sequence(&[1, 5, 9], &[true, true, true]).unwrap();
        let padded = enc
            .encode_sequence(&[1, 5, 9, 0, 0], &[true, true, true, false, false])
            .unwrap();
        for t in 0..3 {
            for j in 0..8 {
                assert_eq!(short[(t, j)], padded[(t, j)], "token {t} dim {j}");
            }
        }
    }

    #[test]
    fn mean_pool_of_a_single_token_is_that_token() {
        let enc = tiny();
        let hidden = enc.encode_sequence(&[2], &[true]).unwrap();
        let pooled = pool(&hidden, &[true], Pooling::Mean);
        for j in 0..8 {
            assert_eq!(pooled[j], hidden[(0, j)]);
        }
    }

    #[test]
    fn last_token_pool_skips_padding() {
        let enc = tiny();
        let mask = [true, true, false];
        let hidden = enc.encode_sequence(&[1, 4, 0], &mask).unwrap();
        let pooled = pool(&hidden, &mask, Pooling::LastToken);
        for j in 0..8 {
            assert_eq!(pooled[j], hidden[(1, j)]);
        }
    }

    #[test]
    fn fingerprint_reacts_to_single_parameter_changes() {
        let enc = tiny();
        let fp = enc.fingerprint();
        assert_eq!(fp, tiny().fingerprint());
        let mut tweaked = enc.clone();
        tweaked.perturb(0, 1e-12);
        assert_ne!(fp, tweaked.fingerprint());
        let mut tweaked = enc.clone();
        let last = tweaked.flat_len() - 1;
        tweaked.perturb(last, 1e-12);
        assert_ne!(fp, tweaked.fingerprint());
    }

    #[test]
    fn invalid_sequences_are_rejected() {
        let enc = tiny();
        assert!(enc.encode_sequence(&[], &[]).is_err());
        assert!(enc.encode_sequence(&[99], &[true]).is_err());
        assert!(enc.encode_sequence(&[1, 2], &[false, false]).is_err());
        assert!(enc
            .encode_sequence(&[1; 10], &[true; 10])
            .is_err());
    }

    #[test]
    fn out_of_range_heads_config_is_rejected() {
        let bad = EncoderConfig {
            vocab_size: 16,
            d_model: 8,
            n_heads: 3,
            n_layers: 1,
            d_ff: 12,
            max_positions: 6,
        };
        assert!(EncoderParams::init(bad, 0).is_err());
    }
}
