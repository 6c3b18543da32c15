//! Differentiable building blocks with hand-written backward passes. Every
//! layer exposes its tensors through `entries`/`entries_mut` so the training
//! loop, checkpointing, and fingerprinting all walk one canonical layout.
//! Gradient buffers reuse the layer types themselves (zeroed clones), which
//! keeps parameter and gradient slices aligned by construction.

use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fakestack_nn::xavier_uniform;

/// (name, shape, values, weight-decay flag) for read access.
pub(crate) type Entry<'a> = (String, Vec<usize>, &'a [f64], bool);
/// (name, values, weight-decay flag) for in-place updates.
pub(crate) type EntryMut<'a> = (String, &'a mut [f64], bool);

fn mat_entry<'a>(name: String, m: &'a Array2<f64>, decay: bool) -> Entry<'a> {
    (name, m.shape().to_vec(), m.as_slice().expect("standard layout"), decay)
}

fn vec_entry<'a>(name: String, v: &'a Array1<f64>, decay: bool) -> Entry<'a> {
    (name, vec![v.len()], v.as_slice().expect("standard layout"), decay)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let av = a.view().insert_axis(Axis(1));
    let bv = b.view().insert_axis(Axis(0));
    av.dot(&bv)
}

pub(crate) fn softmax1(scores: &Array1<f64>) -> Array1<f64> {
    let m = scores.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut z = scores.mapv(|s| (s - m).exp());
    let sum = z.sum();
    z.mapv_inplace(|v| v / sum);
    z
}

// --- Embedding ----------------------------------------------------------------

/// Trainable token embedding table (vocab × dim).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Embedding {
    pub weight: Array2<f64>,
}

impl Embedding {
    pub fn init(vocab: usize, dim: usize, seed: u64) -> Self {
        Self {
            weight: xavier_uniform(vocab, dim, seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, ids: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((ids.len(), self.dim()));
        for (t, &id) in ids.iter().enumerate() {
            out.row_mut(t).assign(&self.weight.row(id));
        }
        out
    }

    pub fn backward(&self, ids: &[usize], dxs: &Array2<f64>, g: &mut Embedding) {
        for (t, &id) in ids.iter().enumerate() {
            let mut row = g.weight.row_mut(id);
            row += &dxs.row(t);
        }
    }

    pub fn entries(&self, prefix: &str) -> Vec<Entry<'_>> {
        vec![mat_entry(format!("{prefix}.weight"), &self.weight, false)]
    }

    pub fn entries_mut(&mut self, prefix: &str) -> Vec<EntryMut<'_>> {
        vec![(
            format!("{prefix}.weight"),
            self.weight.as_slice_mut().expect("standard layout"),
            false,
        )]
    }
}

// --- Dense --------------------------------------------------------------------

/// Fully connected layer acting on a single feature vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub w: Array2<f64>, // in × out
    pub b: Array1<f64>,
}

impl Dense {
    pub fn init(fan_in: usize, fan_out: usize, seed: u64) -> Self {
        Self {
            w: xavier_uniform(fan_in, fan_out, seed),
            b: Array1::zeros(fan_out),
        }
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        x.dot(&self.w) + &self.b
    }

    pub fn backward(&self, x: &Array1<f64>, dy: &Array1<f64>, g: &mut Dense) -> Array1<f64> {
        g.w += &outer(x, dy);
        g.b += dy;
        self.w.dot(dy)
    }

    pub fn entries(&self, prefix: &str) -> Vec<Entry<'_>> {
        vec![
            mat_entry(format!("{prefix}.w"), &self.w, true),
            vec_entry(format!("{prefix}.b"), &self.b, false),
        ]
    }

    pub fn entries_mut(&mut self, prefix: &str) -> Vec<EntryMut<'_>> {
        vec![
            (
                format!("{prefix}.w"),
                self.w.as_slice_mut().expect("standard layout"),
                true,
            ),
            (
                format!("{prefix}.b"),
                self.b.as_slice_mut().expect("standard layout"),
                false,
            ),
        ]
    }
}

// --- LSTM ----------------------------------------------------------------------

/// Single-direction LSTM. Gate blocks are laid out [input, forget, cell,
/// output] along the 4h axis.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Lstm {
    pub wx: Array2<f64>, // in × 4h
    pub wh: Array2<f64>, // h × 4h
    pub b: Array1<f64>,  // 4h
}

pub(crate) struct LstmCache {
    gates: Array2<f64>,  // T × 4h, post-nonlinearity
    cells: Array2<f64>,  // T × h
    tanh_c: Array2<f64>, // T × h
    pub hs: Array2<f64>, // T × h
}

impl Lstm {
    pub fn init(input: usize, hidden: usize, seed: u64) -> Self {
        Self {
            wx: xavier_uniform(input, 4 * hidden, seed),
            wh: xavier_uniform(hidden, 4 * hidden, seed.wrapping_add(1)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.wh.nrows()
    }

    pub fn forward(&self, xs: &Array2<f64>) -> (Array2<f64>, LstmCache) {
        let t_len = xs.nrows();
        let h = self.hidden();
        let mut gates = Array2::zeros((t_len, 4 * h));
        let mut cells = Array2::zeros((t_len, h));
        let mut tanh_c = Array2::zeros((t_len, h));
        let mut hs = Array2::zeros((t_len, h));
        let mut h_prev: Array1<f64> = Array1::zeros(h);
        let mut c_prev: Array1<f64> = Array1::zeros(h);
        for t in 0..t_len {
            let z = xs.row(t).dot(&self.wx) + h_prev.dot(&self.wh) + &self.b;
            let mut gate_row = gates.row_mut(t);
            for k in 0..h {
                gate_row[k] = sigmoid(z[k]); // input gate
                gate_row[h + k] = sigmoid(z[h + k]); // forget gate
                gate_row[2 * h + k] = z[2 * h + k].tanh(); // candidate
                gate_row[3 * h + k] = sigmoid(z[3 * h + k]); // output gate
            }
            for k in 0..h {
                let c = gate_row[h + k] * c_prev[k] + gate_row[k] * gate_row[2 * h + k];
                cells[(t, k)] = c;
                tanh_c[(t, k)] = c.tanh();
                hs[(t, k)] = gate_row[3 * h + k] * tanh_c[(t, k)];
            }
            c_prev.assign(&cells.row(t));
            h_prev.assign(&hs.row(t));
        }
        let out = hs.clone();
        (
            out,
            LstmCache {
                gates,
                cells,
                tanh_c,
                hs,
            },
        )
    }

    /// Backpropagates through time; `dhs` carries ∂loss/∂h_t per step.
    /// Returns ∂loss/∂xs.
    pub fn backward(
        &self,
        xs: &Array2<f64>,
        cache: &LstmCache,
        dhs: &Array2<f64>,
        g: &mut Lstm,
    ) -> Array2<f64> {
        let t_len = xs.nrows();
        let h = self.hidden();
        let mut dxs = Array2::zeros((t_len, xs.ncols()));
        let mut dh_next: Array1<f64> = Array1::zeros(h);
        let mut dc_next: Array1<f64> = Array1::zeros(h);
        let zero = Array1::zeros(h);
        for t in (0..t_len).rev() {
            let dh = &dhs.row(t) + &dh_next;
            let gate = cache.gates.row(t);
            let tc = cache.tanh_c.row(t);
            let c_prev = if t > 0 {
                cache.cells.row(t - 1).to_owned()
            } else {
                zero.clone()
            };
            let mut dz = Array1::zeros(4 * h);
            let mut dc = Array1::zeros(h);
            for k in 0..h {
                let (i, f, gg, o) = (gate[k], gate[h + k], gate[2 * h + k], gate[3 * h + k]);
                let d_o = dh[k] * tc[k];
                dc[k] = dc_next[k] + dh[k] * o * (1.0 - tc[k] * tc[k]);
                let d_i = dc[k] * gg;
                let d_g = dc[k] * i;
                let d_f = dc[k] * c_prev[k];
                dz[k] = d_i * i * (1.0 - i);
                dz[h + k] = d_f * f * (1.0 - f);
                dz[2 * h + k] = d_g * (1.0 - gg * gg);
                dz[3 * h + k] = d_o * o * (1.0 - o);
            }
            for k in 0..h {
                dc_next[k] = dc[k] * gate[h + k];
            }
            g.b += &dz;
            let x_t = xs.row(t).to_owned();
            g.wx += &outer(&x_t, &dz);
            let h_prev = if t > 0 {
                cache.hs.row(t - 1).to_owned()
            } else {
                zero.clone()
            };
            g.wh += &outer(&h_prev, &dz);
            dxs.row_mut(t).assign(&self.wx.dot(&dz));
            dh_next = self.wh.dot(&dz);
        }
        dxs
    }

    pub fn entries(&self, prefix: &str) -> Vec<Entry<'_>> {
        vec![
            mat_entry(format!("{prefix}.wx"), &self.wx, true),
            mat_entry(format!("{prefix}.wh"), &self.wh, true),
            vec_entry(format!("{prefix}.b"), &self.b, false),
        ]
    }

    pub fn entries_mut(&mut self, prefix: &str) -> Vec<EntryMut<'_>> {
        vec![
            (
                format!("{prefix}.wx"),
                self.wx.as_slice_mut().expect("standard layout"),
                true,
            ),
            (
                format!("{prefix}.wh"),
                self.wh.as_slice_mut().expect("standard layout"),
                true,
            ),
            (
                format!("{prefix}.b"),
                self.b.as_slice_mut().expect("standard layout"),
                false,
            ),
        ]
    }
}

// --- Bidirectional LSTM ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

pub(crate) struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
    xs_rev: Array2<f64>,
}

fn reverse_rows(m: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(m.raw_dim());
    let t_len = m.nrows();
    for t in 0..t_len {
        out.row_mut(t).assign(&m.row(t_len - 1 - t));
    }
    out
}

impl BiLstm {
    pub fn init(input: usize, hidden: usize, seed: u64) -> Self {
        Self {
            fwd: Lstm::init(input, hidden, seed),
            bwd: Lstm::init(input, hidden, seed.wrapping_add(7)),
        }
    }

    pub fn output_dim(&self) -> usize {
        2 * self.fwd.hidden()
    }

    /// Concatenated forward/backward states, T × 2h.
    pub fn forward(&self, xs: &Array2<f64>) -> (Array2<f64>, BiLstmCache) {
        let (hs_f, cache_f) = self.fwd.forward(xs);
        let xs_rev = reverse_rows(xs);
        let (hs_b_rev, cache_b) = self.bwd.forward(&xs_rev);
        let hs_b = reverse_rows(&hs_b_rev);
        let hs = concatenate(Axis(1), &[hs_f.view(), hs_b.view()]).expect("same row count");
        (
            hs,
            BiLstmCache {
                fwd: cache_f,
                bwd: cache_b,
                xs_rev,
            },
        )
    }

    pub fn backward(
        &self,
        xs: &Array2<f64>,
        cache: &BiLstmCache,
        dhs: &Array2<f64>,
        g: &mut BiLstm,
    ) -> Array2<f64> {
        let h = self.fwd.hidden();
        let dh_f = dhs.slice(ndarray::s![.., 0..h]).to_owned();
        let dh_b = reverse_rows(&dhs.slice(ndarray::s![.., h..2 * h]).to_owned());
        let dxs_f = self.fwd.backward(xs, &cache.fwd, &dh_f, &mut g.fwd);
        let dxs_b_rev = self.bwd.backward(&cache.xs_rev, &cache.bwd, &dh_b, &mut g.bwd);
        dxs_f + reverse_rows(&dxs_b_rev)
    }

    pub fn entries(&self, prefix: &str) -> Vec<Entry<'_>> {
        let mut v = self.fwd.entries(&format!("{prefix}.fwd"));
        v.extend(self.bwd.entries(&format!("{prefix}.bwd")));
        v
    }

    pub fn entries_mut(&mut self, prefix: &str) -> Vec<EntryMut<'_>> {
        let (fp, bp) = (format!("{prefix}.fwd"), format!("{prefix}.bwd"));
        let mut v = self.fwd.entries_mut(&fp);
        v.extend(self.bwd.entries_mut(&bp));
        v
    }
}

// --- Additive attention -----------------------------------------------------------

/// Additive (tanh-projection) attention over a sequence of state vectors.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AdditiveAttention {
    pub w: Array2<f64>, // dim × att
    pub b: Array1<f64>, // att
    pub v: Array1<f64>, // att
}

pub(crate) struct AttnCache {
    u: Array2<f64>, // T × att (post-tanh)
    pub alpha: Array1<f64>,
}

impl AdditiveAttention {
    pub fn init(dim: usize, att: usize, seed: u64) -> Self {
        Self {
            w: xavier_uniform(dim, att, seed),
            b: Array1::zeros(att),
            v: xavier_uniform(att, 1, seed.wrapping_add(3)).column(0).to_owned(),
        }
    }

    /// Returns the attention-weighted context vector and the weights.
    pub fn forward(&self, hs: &Array2<f64>) -> (Array1<f64>, AttnCache) {
        let mut u = hs.dot(&self.w);
        for mut row in u.rows_mut() {
            row += &self.b;
        }
        u.mapv_inplace(f64::tanh);
        let scores = u.dot(&self.v);
        let alpha = softmax1(&scores);
        let ctx = hs.t().dot(&alpha);
        (ctx, AttnCache { u, alpha })
    }

    /// `dalpha_extra` carries gradient arriving directly at the attention
    /// weights (beyond the context-vector path), used when the weights feed
    /// other parts of the model.
    pub fn backward(
        &self,
        hs: &Array2<f64>,
        cache: &AttnCache,
        dctx: &Array1<f64>,
        dalpha_extra: Option<&Array1<f64>>,
        g: &mut AdditiveAttention,
    ) -> Array2<f64> {
        let alpha = &cache.alpha;
        // ctx = Σ_t α_t h_t: direct path into hs plus the score path.
        let mut dhs = outer(alpha, dctx);
        let mut dalpha = hs.dot(dctx);
        if let Some(extra) = dalpha_extra {
            dalpha += extra;
        }
        let inner = alpha.dot(&dalpha);
        let dscores = alpha * &(dalpha - inner);
        g.v += &cache.u.t().dot(&dscores);
        let du = outer(&dscores, &self.v);
        let dz = du * &cache.u.mapv(|u| 1.0 - u * u);
        g.w += &hs.t().dot(&dz);
        g.b += &dz.sum_axis(Axis(0));
        dhs += &dz.dot(&self.w.t());
        dhs
    }

    pub fn entries(&self, prefix: &str) -> Vec<Entry<'_>> {
        vec![
            mat_entry(format!("{prefix}.w"), &self.w, true),
            vec_entry(format!("{prefix}.b"), &self.b, false),
            vec_entry(format!("{prefix}.v"), &self.v, false),
        ]
    }

    pub fn entries_mut(&mut self, prefix: &str) -> Vec<EntryMut<'_>> {
        vec![
            (
                format!("{prefix}.w"),
                self.w.as_slice_mut().expect("standard layout"),
                true,
            ),
            (
                format!("{prefix}.b"),
                self.b.as_slice_mut().expect("standard layout"),
                false,
            ),
            (
                format!("{prefix}.v"),
                self.v.as_slice_mut().expect("standard layout"),
                false,
            ),
        ]
    }
}

// --- Convolution bank with global max pooling ---------------------------------------

/// One bank of 1-D convolutions of a single width followed by ReLU and
/// global max pooling. Input rows shorter than the width are zero-extended.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ConvBank {
    pub width: usize,
    pub weight: Array2<f64>, // (width·in) × filters
    pub bias: Array1<f64>,   // filters
}

pub(crate) struct ConvCache {
    windows: Array2<f64>, // P × (width·in)
    scores: Array2<f64>,  // P × filters, pre-ReLU
    argmax: Vec<usize>,
    in_rows: usize,
}

impl ConvBank {
    pub fn init(width: usize, input: usize, filters: usize, seed: u64) -> Self {
        Self {
            width,
            weight: xavier_uniform(width * input, filters, seed),
            bias: Array1::zeros(filters),
        }
    }

    pub fn filters(&self) -> usize {
        self.bias.len()
    }

    fn padded(&self, xs: &Array2<f64>) -> Array2<f64> {
        if xs.nrows() >= self.width {
            return xs.clone();
        }
        let mut out = Array2::zeros((self.width, xs.ncols()));
        out.slice_mut(ndarray::s![0..xs.nrows(), ..]).assign(xs);
        out
    }

    pub fn forward(&self, xs: &Array2<f64>) -> (Array1<f64>, ConvCache) {
        let in_rows = xs.nrows();
        let xs = self.padded(xs);
        let d = xs.ncols();
        let p_len = xs.nrows() - self.width + 1;
        let mut windows = Array2::zeros((p_len, self.width * d));
        for p in 0..p_len {
            for k in 0..self.width {
                windows
                    .slice_mut(ndarray::s![p, k * d..(k + 1) * d])
                    .assign(&xs.row(p + k));
            }
        }
        let mut scores = windows.dot(&self.weight);
        for mut row in scores.rows_mut() {
            row += &self.bias;
        }
        let f_len = self.filters();
        let mut pooled = Array1::zeros(f_len);
        let mut argmax = vec![0usize; f_len];
        for f in 0..f_len {
            let mut best = f64::NEG_INFINITY;
            let mut best_p = 0;
            for p in 0..p_len {
                let a = scores[(p, f)].max(0.0);
                if a > best {
                    best = a;
                    best_p = p;
                }
            }
            pooled[f] = best;
            argmax[f] = best_p;
        }
        (
            pooled,
            ConvCache {
                windows,
                scores,
                argmax,
                in_rows,
            },
        )
    }

    pub fn backward(
        &self,
        cache: &ConvCache,
        dpooled: &Array1<f64>,
        g: &mut ConvBank,
    ) -> Array2<f64> {
        let d = self.weight.nrows() / self.width;
        let padded_rows = cache.windows.nrows() + self.width - 1;
        let mut dxs_padded = Array2::zeros((padded_rows, d));
        for f in 0..self.filters() {
            let p = cache.argmax[f];
            // ReLU gate: gradient flows only when the winning pre-activation
            // is strictly positive.
            if cache.scores[(p, f)] <= 0.0 {
                continue;
            }
            let dscore = dpooled[f];
            if dscore == 0.0 {
                continue;
            }
            let window = cache.windows.row(p);
            for (i, w) in window.iter().enumerate() {
                g.weight[(i, f)] += w * dscore;
            }
            g.bias[f] += dscore;
            for k in 0..self.width {
                for j in 0..d {
                    dxs_padded[(p + k, j)] += self.weight[(k * d + j, f)] * dscore;
                }
            }
        }
        dxs_padded.slice(ndarray::s![0..cache.in_rows, ..]).to_owned()
    }

    pub fn entries(&self, prefix: &str) -> Vec<Entry<'_>> {
        vec![
            mat_entry(format!("{prefix}.weight"), &self.weight, true),
            vec_entry(format!("{prefix}.bias"), &self.bias, false),
        ]
    }

    pub fn entries_mut(&mut self, prefix: &str) -> Vec<EntryMut<'_>> {
        vec![
            (
                format!("{prefix}.weight"),
                self.weight.as_slice_mut().expect("standard layout"),
                true,
            ),
            (
                format!("{prefix}.bias"),
                self.bias.as_slice_mut().expect("standard layout"),
                false,
            ),
        ]
    }
}

// --- Dropout -----------------------------------------------------------------------

/// Inverted dropout on a feature vector; `None` mask means identity (inference
/// or rate 0).
pub(crate) fn dropout_forward(
    x: &Array1<f64>,
    rate: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> (Array1<f64>, Option<Array1<f64>>) {
    match rng {
        Some(rng) if rate > 0.0 => {
            let keep = 1.0 - rate;
            let mask = Array1::from_shape_fn(x.len(), |_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            (x * &mask, Some(mask))
        }
        _ => (x.clone(), None),
    }
}

pub(crate) fn dropout_backward(dy: &Array1<f64>, mask: &Option<Array1<f64>>) -> Array1<f64> {
    match mask {
        Some(mask) => dy * mask,
        None => dy.clone(),
    }
}
