//! The five baseline architectures and their shared model wrapper. Each
//! architecture implements `run` (forward to logits with caches) and
//! `backprop` (exact gradients accumulated into a zeroed clone of the
//! parameters), and enumerates its tensors in one canonical order used by the
//! optimizer, checkpoints, and fingerprints alike.

use std::fs;
use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fakestack_data::LabeledPost;
use fakestack_nn::{derive_seed, ClassProbabilities, PredictionRecord};

use crate::config::{BaselineConfig, BaselineKind};
use crate::layers::{
    dropout_backward, dropout_forward, softmax1, AdditiveAttention, AttnCache, BiLstm,
    BiLstmCache, ConvBank, ConvCache, Dense, Embedding, Entry, EntryMut,
};
use crate::vocab::Vocab;
use crate::{BaselineError, Result};

const DEFAULT_MAX_SEQ_LEN: usize = 128;
const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// A post encoded for a particular architecture: most kinds consume a flat id
/// sequence, the hierarchical model consumes one id sequence per sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncodedPost {
    Flat(Vec<usize>),
    Sentences(Vec<Vec<usize>>),
}

/// Splits on sentence-ending punctuation; a post with none is one sentence.
fn split_sentences(text: &str) -> Vec<String> {
    let parts: Vec<String> = text
        .split(['.', '!', '?'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if parts.is_empty() {
        vec![text.to_string()]
    } else {
        parts
    }
}

pub(crate) fn encode_post(
    vocab: &Vocab,
    kind: BaselineKind,
    text: &str,
    max_seq_len: usize,
) -> EncodedPost {
    match kind {
        BaselineKind::Han => EncodedPost::Sentences(
            split_sentences(text)
                .iter()
                .take(max_seq_len.max(1))
                .map(|s| vocab.encode(s, max_seq_len))
                .collect(),
        ),
        _ => EncodedPost::Flat(vocab.encode(text, max_seq_len)),
    }
}

// --- Bi-LSTM with additive attention ------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BilstmAttnParams {
    embedding: Embedding,
    bilstm: BiLstm,
    attention: AdditiveAttention,
    out: Dense,
}

pub(crate) struct BilstmRunCache {
    xs: Array2<f64>,
    hs: Array2<f64>,
    bicache: BiLstmCache,
    attn: AttnCache,
    feat: Array1<f64>,
    mask: Option<Array1<f64>>,
}

impl BilstmAttnParams {
    fn init(cfg: &BaselineConfig, vocab_len: usize, seed: u64) -> Self {
        let (d, h) = (cfg.embedding_dim, cfg.hidden_units);
        Self {
            embedding: Embedding::init(vocab_len, d, derive_seed(seed, 0)),
            bilstm: BiLstm::init(d, h, derive_seed(seed, 1)),
            attention: AdditiveAttention::init(2 * h, h, derive_seed(seed, 2)),
            out: Dense::init(2 * h, 2, derive_seed(seed, 3)),
        }
    }

    fn run(
        &self,
        ids: &[usize],
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> (Array1<f64>, BilstmRunCache) {
        let xs = self.embedding.forward(ids);
        let (hs, bicache) = self.bilstm.forward(&xs);
        let (ctx, attn) = self.attention.forward(&hs);
        let (feat, mask) = match dropout {
            Some((rng, rate)) => dropout_forward(&ctx, rate, Some(rng)),
            None => (ctx.clone(), None),
        };
        let logits = self.out.forward(&feat);
        (
            logits,
            BilstmRunCache {
                xs,
                hs,
                bicache,
                attn,
                feat,
                mask,
            },
        )
    }

    fn backprop(&self, ids: &[usize], cache: &BilstmRunCache, dlogits: &Array1<f64>, g: &mut Self) {
        let dfeat = self.out.backward(&cache.feat, dlogits, &mut g.out);
        let dctx = dropout_backward(&dfeat, &cache.mask);
        let dhs = self
            .attention
            .backward(&cache.hs, &cache.attn, &dctx, None, &mut g.attention);
        let dxs = self.bilstm.backward(&cache.xs, &cache.bicache, &dhs, &mut g.bilstm);
        self.embedding.backward(ids, &dxs, &mut g.embedding);
    }

    fn entries(&self) -> Vec<Entry<'_>> {
        let mut v = self.embedding.entries("embedding");
        v.extend(self.bilstm.entries("bilstm"));
        v.extend(self.attention.entries("attention"));
        v.extend(self.out.entries("out"));
        v
    }

    fn entries_mut(&mut self) -> Vec<EntryMut<'_>> {
        let mut v = self.embedding.entries_mut("embedding");
        v.extend(self.bilstm.entries_mut("bilstm"));
        v.extend(self.attention.entries_mut("attention"));
        v.extend(self.out.entries_mut("out"));
        v
    }
}

// --- 1-D CNN --------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cnn1dParams {
    embedding: Embedding,
    banks: Vec<ConvBank>,
    out: Dense,
}

pub(crate) struct CnnRunCache {
    bank_caches: Vec<ConvCache>,
    feat0: Array1<f64>,
    feat: Array1<f64>,
    mask: Option<Array1<f64>>,
}

impl Cnn1dParams {
    fn init(cfg: &BaselineConfig, vocab_len: usize, seed: u64) -> Self {
        let d = cfg.embedding_dim;
        let filters = cfg.filter_count();
        let banks: Vec<ConvBank> = cfg
            .filter_sizes()
            .iter()
            .enumerate()
            .map(|(k, &w)| ConvBank::init(w, d, filters, derive_seed(seed, 1 + k as u64)))
            .collect();
        Self {
            embedding: Embedding::init(vocab_len, d, derive_seed(seed, 0)),
            out: Dense::init(filters * banks.len(), 2, derive_seed(seed, 40)),
            banks,
        }
    }

    fn pooled(&self, xs: &Array2<f64>) -> (Array1<f64>, Vec<ConvCache>) {
        let mut parts = Vec::with_capacity(self.banks.len());
        let mut caches = Vec::with_capacity(self.banks.len());
        for bank in &self.banks {
            let (pooled, cache) = bank.forward(xs);
            parts.push(pooled);
            caches.push(cache);
        }
        let views: Vec<_> = parts.iter().map(Array1::view).collect();
        (concatenate(Axis(0), &views).expect("non-empty banks"), caches)
    }

    fn run(
        &self,
        ids: &[usize],
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> (Array1<f64>, CnnRunCache) {
        let xs = self.embedding.forward(ids);
        let (feat0, bank_caches) = self.pooled(&xs);
        let (feat, mask) = match dropout {
            Some((rng, rate)) => dropout_forward(&feat0, rate, Some(rng)),
            None => (feat0.clone(), None),
        };
        let logits = self.out.forward(&feat);
        (
            logits,
            CnnRunCache {
                bank_caches,
                feat0,
                feat,
                mask,
            },
        )
    }

    fn backprop(&self, ids: &[usize], cache: &CnnRunCache, dlogits: &Array1<f64>, g: &mut Self) {
        let dfeat = self.out.backward(&cache.feat, dlogits, &mut g.out);
        let dfeat0 = dropout_backward(&dfeat, &cache.mask);
        let mut dxs: Option<Array2<f64>> = None;
        let filters = self.banks[0].filters();
        for (k, bank) in self.banks.iter().enumerate() {
            let dpooled = dfeat0.slice(s![k * filters..(k + 1) * filters]).to_owned();
            let dx = bank.backward(&cache.bank_caches[k], &dpooled, &mut g.banks[k]);
            dxs = Some(match dxs {
                None => dx,
                Some(acc) => acc + dx,
            });
        }
        self.embedding
            .backward(ids, &dxs.expect("at least one bank"), &mut g.embedding);
    }

    fn entries(&self) -> Vec<Entry<'_>> {
        let mut v = self.embedding.entries("embedding");
        for (k, bank) in self.banks.iter().enumerate() {
            v.extend(bank.entries(&format!("bank{k}_w{}", bank.width)));
        }
        v.extend(self.out.entries("out"));
        v
    }

    fn entries_mut(&mut self) -> Vec<EntryMut<'_>> {
        let mut v = self.embedding.entries_mut("embedding");
        for (k, bank) in self.banks.iter_mut().enumerate() {
            let prefix = format!("bank{k}_w{}", bank.width);
            v.extend(bank.entries_mut(&prefix));
        }
        v.extend(self.out.entries_mut("out"));
        v
    }
}

// --- Hierarchical attention network ----------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct HanParams {
    embedding: Embedding,
    word_bilstm: BiLstm,
    word_attention: AdditiveAttention,
    sent_bilstm: BiLstm,
    sent_attention: AdditiveAttention,
    out: Dense,
}

pub(crate) struct HanSentenceCache {
    xs: Array2<f64>,
    hs: Array2<f64>,
    bicache: BiLstmCache,
    attn: AttnCache,
}

pub(crate) struct HanRunCache {
    sentences: Vec<HanSentenceCache>,
    svecs: Array2<f64>,
    sh: Array2<f64>,
    sent_bicache: BiLstmCache,
    sent_attn: AttnCache,
    feat: Array1<f64>,
    mask: Option<Array1<f64>>,
}

impl HanParams {
    fn init(cfg: &BaselineConfig, vocab_len: usize, seed: u64) -> Self {
        let (d, h) = (cfg.embedding_dim, cfg.hidden_units);
        Self {
            embedding: Embedding::init(vocab_len, d, derive_seed(seed, 0)),
            word_bilstm: BiLstm::init(d, h, derive_seed(seed, 1)),
            word_attention: AdditiveAttention::init(2 * h, h, derive_seed(seed, 2)),
            sent_bilstm: BiLstm::init(2 * h, h, derive_seed(seed, 3)),
            sent_attention: AdditiveAttention::init(2 * h, h, derive_seed(seed, 4)),
            out: Dense::init(2 * h, 2, derive_seed(seed, 5)),
        }
    }

    fn run(
        &self,
        sentences: &[Vec<usize>],
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> (Array1<f64>, HanRunCache) {
        let mut sent_caches = Vec::with_capacity(sentences.len());
        let mut svecs = Array2::zeros((sentences.len(), self.word_bilstm.output_dim()));
        for (i, ids) in sentences.iter().enumerate() {
            let xs = self.embedding.forward(ids);
            let (hs, bicache) = self.word_bilstm.forward(&xs);
            let (svec, attn) = self.word_attention.forward(&hs);
            svecs.row_mut(i).assign(&svec);
            sent_caches.push(HanSentenceCache {
                xs,
                hs,
                bicache,
                attn,
            });
        }
        let (sh, sent_bicache) = self.sent_bilstm.forward(&svecs);
        let (doc, sent_attn) = self.sent_attention.forward(&sh);
        let (feat, mask) = match dropout {
            Some((rng, rate)) => dropout_forward(&doc, rate, Some(rng)),
            None => (doc.clone(), None),
        };
        let logits = self.out.forward(&feat);
        (
            logits,
            HanRunCache {
                sentences: sent_caches,
                svecs,
                sh,
                sent_bicache,
                sent_attn,
                feat,
                mask,
            },
        )
    }

    fn backprop(
        &self,
        sentences: &[Vec<usize>],
        cache: &HanRunCache,
        dlogits: &Array1<f64>,
        g: &mut Self,
    ) {
        let dfeat = self.out.backward(&cache.feat, dlogits, &mut g.out);
        let ddoc = dropout_backward(&dfeat, &cache.mask);
        let dsh = self.sent_attention.backward(
            &cache.sh,
            &cache.sent_attn,
            &ddoc,
            None,
            &mut g.sent_attention,
        );
        let dsvecs =
            self.sent_bilstm
                .backward(&cache.svecs, &cache.sent_bicache, &dsh, &mut g.sent_bilstm);
        for (i, ids) in sentences.iter().enumerate() {
            let sc = &cache.sentences[i];
            let dsvec = dsvecs.row(i).to_owned();
            let dhs = self
                .word_attention
                .backward(&sc.hs, &sc.attn, &dsvec, None, &mut g.word_attention);
            let dxs = self
                .word_bilstm
                .backward(&sc.xs, &sc.bicache, &dhs, &mut g.word_bilstm);
            self.embedding.backward(ids, &dxs, &mut g.embedding);
        }
    }

    fn entries(&self) -> Vec<Entry<'_>> {
        let mut v = self.embedding.entries("embedding");
        v.extend(self.word_bilstm.entries("word_bilstm"));
        v.extend(self.word_attention.entries("word_attention"));
        v.extend(self.sent_bilstm.entries("sent_bilstm"));
        v.extend(self.sent_attention.entries("sent_attention"));
        v.extend(self.out.entries("out"));
        v
    }

    fn entries_mut(&mut self) -> Vec<EntryMut<'_>> {
        let mut v = self.embedding.entries_mut("embedding");
        v.extend(self.word_bilstm.entries_mut("word_bilstm"));
        v.extend(self.word_attention.entries_mut("word_attention"));
        v.extend(self.sent_bilstm.entries_mut("sent_bilstm"));
        v.extend(self.sent_attention.entries_mut("sent_attention"));
        v.extend(self.out.entries_mut("out"));
        v
    }
}

// --- Recurrent-convolutional network ----------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RcnnParams {
    embedding: Embedding,
    wl: Array2<f64>,  // h × h, left-context recurrence
    wsl: Array2<f64>, // d × h, left word projection
    bl: Array1<f64>,
    wr: Array2<f64>,
    wsr: Array2<f64>,
    br: Array1<f64>,
    proj: Dense, // (2h + d) × hidden_units semantic projection
    out: Dense,
}

pub(crate) struct RcnnRunCache {
    es: Array2<f64>,
    cl: Array2<f64>,
    cr: Array2<f64>,
    x: Array2<f64>,
    y: Array2<f64>,
    argmax: Vec<usize>,
    feat: Array1<f64>,
    mask: Option<Array1<f64>>,
}

impl RcnnParams {
    fn init(cfg: &BaselineConfig, vocab_len: usize, seed: u64) -> Self {
        use fakestack_nn::xavier_uniform;
        let (d, h) = (cfg.embedding_dim, cfg.hidden_units);
        Self {
            embedding: Embedding::init(vocab_len, d, derive_seed(seed, 0)),
            wl: xavier_uniform(h, h, derive_seed(seed, 1)),
            wsl: xavier_uniform(d, h, derive_seed(seed, 2)),
            bl: Array1::zeros(h),
            wr: xavier_uniform(h, h, derive_seed(seed, 3)),
            wsr: xavier_uniform(d, h, derive_seed(seed, 4)),
            br: Array1::zeros(h),
            proj: Dense::init(2 * h + d, h, derive_seed(seed, 5)),
            out: Dense::init(h, 2, derive_seed(seed, 6)),
        }
    }

    fn run(
        &self,
        ids: &[usize],
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> (Array1<f64>, RcnnRunCache) {
        let es = self.embedding.forward(ids);
        let t_len = ids.len();
        let h = self.wl.nrows();
        let d = es.ncols();
        // Left and right recurrent contexts; position 0 (resp. T−1) starts
        // from a zero context.
        let mut cl = Array2::zeros((t_len, h));
        for i in 1..t_len {
            let a = cl.row(i - 1).dot(&self.wl) + es.row(i - 1).dot(&self.wsl) + &self.bl;
            cl.row_mut(i).assign(&a.mapv(f64::tanh));
        }
        let mut cr = Array2::zeros((t_len, h));
        for i in (0..t_len.saturating_sub(1)).rev() {
            let a = cr.row(i + 1).dot(&self.wr) + es.row(i + 1).dot(&self.wsr) + &self.br;
            cr.row_mut(i).assign(&a.mapv(f64::tanh));
        }
        let mut x = Array2::zeros((t_len, 2 * h + d));
        for i in 0..t_len {
            x.slice_mut(s![i, 0..h]).assign(&cl.row(i));
            x.slice_mut(s![i, h..h + d]).assign(&es.row(i));
            x.slice_mut(s![i, h + d..2 * h + d]).assign(&cr.row(i));
        }
        let mut y = x.dot(&self.proj.w);
        for mut row in y.rows_mut() {
            row += &self.proj.b;
        }
        y.mapv_inplace(f64::tanh);
        let sem = y.ncols();
        let mut pooled = Array1::zeros(sem);
        let mut argmax = vec![0usize; sem];
        for k in 0..sem {
            let mut best = f64::NEG_INFINITY;
            for i in 0..t_len {
                if y[(i, k)] > best {
                    best = y[(i, k)];
                    argmax[k] = i;
                }
            }
            pooled[k] = best;
        }
        let (feat, mask) = match dropout {
            Some((rng, rate)) => dropout_forward(&pooled, rate, Some(rng)),
            None => (pooled.clone(), None),
        };
        let logits = self.out.forward(&feat);
        (
            logits,
            RcnnRunCache {
                es,
                cl,
                cr,
                x,
                y,
                argmax,
                feat,
                mask,
            },
        )
    }

    fn backprop(&self, ids: &[usize], cache: &RcnnRunCache, dlogits: &Array1<f64>, g: &mut Self) {
        let t_len = ids.len();
        let h = self.wl.nrows();
        let d = cache.es.ncols();
        let dfeat = self.out.backward(&cache.feat, dlogits, &mut g.out);
        let dpooled = dropout_backward(&dfeat, &cache.mask);
        let mut dy = Array2::zeros(cache.y.raw_dim());
        for k in 0..dpooled.len() {
            dy[(cache.argmax[k], k)] += dpooled[k];
        }
        let dz = &dy * &cache.y.mapv(|v| 1.0 - v * v);
        g.proj.w += &cache.x.t().dot(&dz);
        g.proj.b += &dz.sum_axis(Axis(0));
        let dx = dz.dot(&self.proj.w.t());
        let mut des = dx.slice(s![.., h..h + d]).to_owned();
        // Left-context recurrence, backwards through time.
        let mut acc: Array1<f64> = Array1::zeros(h);
        for i in (1..t_len).rev() {
            let dc = &dx.slice(s![i, 0..h]) + &acc;
            let da = &dc * &cache.cl.row(i).mapv(|v| 1.0 - v * v);
            g.bl += &da;
            let cl_prev = cache.cl.row(i - 1).to_owned();
            let e_prev = cache.es.row(i - 1).to_owned();
            g.wl += &cl_prev
                .view()
                .insert_axis(Axis(1))
                .dot(&da.view().insert_axis(Axis(0)));
            g.wsl += &e_prev
                .view()
                .insert_axis(Axis(1))
                .dot(&da.view().insert_axis(Axis(0)));
            let mut de_prev = des.row_mut(i - 1);
            de_prev += &self.wsl.dot(&da);
            acc = self.wl.dot(&da);
        }
        // Right-context recurrence, forwards through time.
        let mut acc: Array1<f64> = Array1::zeros(h);
        for i in 0..t_len.saturating_sub(1) {
            let dc = &dx.slice(s![i, h + d..2 * h + d]) + &acc;
            let da = &dc * &cache.cr.row(i).mapv(|v| 1.0 - v * v);
            g.br += &da;
            let cr_next = cache.cr.row(i + 1).to_owned();
            let e_next = cache.es.row(i + 1).to_owned();
            g.wr += &cr_next
                .view()
                .insert_axis(Axis(1))
                .dot(&da.view().insert_axis(Axis(0)));
            g.wsr += &e_next
                .view()
                .insert_axis(Axis(1))
                .dot(&da.view().insert_axis(Axis(0)));
            let mut de_next = des.row_mut(i + 1);
            de_next += &self.wsr.dot(&da);
            acc = self.wr.dot(&da);
        }
        self.embedding.backward(ids, &des, &mut g.embedding);
    }

    fn entries(&self) -> Vec<Entry<'_>> {
        let mut v = self.embedding.entries("embedding");
        v.push((
            "left.w".into(),
            self.wl.shape().to_vec(),
            self.wl.as_slice().expect("standard layout"),
            true,
        ));
        v.push((
            "left.ws".into(),
            self.wsl.shape().to_vec(),
            self.wsl.as_slice().expect("standard layout"),
            true,
        ));
        v.push((
            "left.b".into(),
            vec![self.bl.len()],
            self.bl.as_slice().expect("standard layout"),
            false,
        ));
        v.push((
            "right.w".into(),
            self.wr.shape().to_vec(),
            self.wr.as_slice().expect("standard layout"),
            true,
        ));
        v.push((
            "right.ws".into(),
            self.wsr.shape().to_vec(),
            self.wsr.as_slice().expect("standard layout"),
            true,
        ));
        v.push((
            "right.b".into(),
            vec![self.br.len()],
            self.br.as_slice().expect("standard layout"),
            false,
        ));
        v.extend(self.proj.entries("proj"));
        v.extend(self.out.entries("out"));
        v
    }

    fn entries_mut(&mut self) -> Vec<EntryMut<'_>> {
        let mut v = self.embedding.entries_mut("embedding");
        v.push((
            "left.w".into(),
            self.wl.as_slice_mut().expect("standard layout"),
            true,
        ));
        v.push((
            "left.ws".into(),
            self.wsl.as_slice_mut().expect("standard layout"),
            true,
        ));
        v.push((
            "left.b".into(),
            self.bl.as_slice_mut().expect("standard layout"),
            false,
        ));
        v.push((
            "right.w".into(),
            self.wr.as_slice_mut().expect("standard layout"),
            true,
        ));
        v.push((
            "right.ws".into(),
            self.wsr.as_slice_mut().expect("standard layout"),
            true,
        ));
        v.push((
            "right.b".into(),
            self.br.as_slice_mut().expect("standard layout"),
            false,
        ));
        v.extend(self.proj.entries_mut("proj"));
        v.extend(self.out.entries_mut("out"));
        v
    }
}

// --- Attention-multichannel CNN ----------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AmcnnParams {
    embedding: Embedding,
    bilstm: BiLstm,
    attention: AdditiveAttention,
    proj: Dense, // 2h × d context projection forming the second channel
    banks: Vec<ConvBank>,
    out: Dense,
}

pub(crate) struct AmcnnRunCache {
    xs: Array2<f64>,
    hs: Array2<f64>,
    bicache: BiLstmCache,
    attn: AttnCache,
    tmat: Array2<f64>,
    bank_caches: Vec<ConvCache>,
    feat0: Array1<f64>,
    feat: Array1<f64>,
    mask: Option<Array1<f64>>,
}

impl AmcnnParams {
    fn init(cfg: &BaselineConfig, vocab_len: usize, seed: u64) -> Self {
        let (d, h) = (cfg.embedding_dim, cfg.hidden_units);
        let filters = cfg.filter_count();
        let banks: Vec<ConvBank> = cfg
            .filter_sizes()
            .iter()
            .enumerate()
            .map(|(k, &w)| ConvBank::init(w, 2 * d, filters, derive_seed(seed, 10 + k as u64)))
            .collect();
        Self {
            embedding: Embedding::init(vocab_len, d, derive_seed(seed, 0)),
            bilstm: BiLstm::init(d, h, derive_seed(seed, 1)),
            attention: AdditiveAttention::init(2 * h, h, derive_seed(seed, 2)),
            proj: Dense::init(2 * h, d, derive_seed(seed, 3)),
            out: Dense::init(filters * banks.len(), 2, derive_seed(seed, 41)),
            banks,
        }
    }

    /// Channels: the raw embeddings, and recurrent context vectors reweighted
    /// by renormalized attention (scaled by T so an even distribution leaves
    /// magnitudes unchanged).
    fn channels(&self, xs: &Array2<f64>, tmat: &Array2<f64>, alpha: &Array1<f64>) -> Array2<f64> {
        let t_len = xs.nrows();
        let mut chan_b = tmat.clone();
        for (i, mut row) in chan_b.rows_mut().into_iter().enumerate() {
            row *= alpha[i] * t_len as f64;
        }
        concatenate(Axis(1), &[xs.view(), chan_b.view()]).expect("same row count")
    }

    fn run(
        &self,
        ids: &[usize],
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> (Array1<f64>, AmcnnRunCache) {
        let xs = self.embedding.forward(ids);
        let (hs, bicache) = self.bilstm.forward(&xs);
        let (_ctx, attn) = self.attention.forward(&hs);
        let mut tmat = hs.dot(&self.proj.w);
        for mut row in tmat.rows_mut() {
            row += &self.proj.b;
        }
        tmat.mapv_inplace(f64::tanh);
        let m = self.channels(&xs, &tmat, &attn.alpha);
        let mut parts = Vec::with_capacity(self.banks.len());
        let mut bank_caches = Vec::with_capacity(self.banks.len());
        for bank in &self.banks {
            let (pooled, cache) = bank.forward(&m);
            parts.push(pooled);
            bank_caches.push(cache);
        }
        let views: Vec<_> = parts.iter().map(Array1::view).collect();
        let feat0 = concatenate(Axis(0), &views).expect("non-empty banks");
        let (feat, mask) = match dropout {
            Some((rng, rate)) => dropout_forward(&feat0, rate, Some(rng)),
            None => (feat0.clone(), None),
        };
        let logits = self.out.forward(&feat);
        (
            logits,
            AmcnnRunCache {
                xs,
                hs,
                bicache,
                attn,
                tmat,
                bank_caches,
                feat0,
                feat,
                mask,
            },
        )
    }

    fn backprop(&self, ids: &[usize], cache: &AmcnnRunCache, dlogits: &Array1<f64>, g: &mut Self) {
        let t_len = ids.len();
        let d = cache.xs.ncols();
        let dfeat = self.out.backward(&cache.feat, dlogits, &mut g.out);
        let dfeat0 = dropout_backward(&dfeat, &cache.mask);
        let filters = self.banks[0].filters();
        let mut dm: Option<Array2<f64>> = None;
        for (k, bank) in self.banks.iter().enumerate() {
            let dpooled = dfeat0.slice(s![k * filters..(k + 1) * filters]).to_owned();
            let dx = bank.backward(&cache.bank_caches[k], &dpooled, &mut g.banks[k]);
            dm = Some(match dm {
                None => dx,
                Some(acc) => acc + dx,
            });
        }
        let dm = dm.expect("at least one bank");
        let mut dxs = dm.slice(s![.., 0..d]).to_owned();
        let dchan_b = dm.slice(s![.., d..2 * d]).to_owned();
        // chan_b row i = (α_i · T) · tmat_i.
        let alpha = &cache.attn.alpha;
        let mut dtmat = dchan_b.clone();
        let mut dalpha = Array1::zeros(t_len);
        for i in 0..t_len {
            let scale = alpha[i] * t_len as f64;
            let mut row = dtmat.row_mut(i);
            row *= scale;
            dalpha[i] = t_len as f64 * dchan_b.row(i).dot(&cache.tmat.row(i));
        }
        let dzp = &dtmat * &cache.tmat.mapv(|v| 1.0 - v * v);
        g.proj.w += &cache.hs.t().dot(&dzp);
        g.proj.b += &dzp.sum_axis(Axis(0));
        let dhs_proj = dzp.dot(&self.proj.w.t());
        let zero_ctx = Array1::zeros(cache.hs.ncols());
        let dhs_attn = self.attention.backward(
            &cache.hs,
            &cache.attn,
            &zero_ctx,
            Some(&dalpha),
            &mut g.attention,
        );
        let dhs = dhs_proj + dhs_attn;
        let dxs_lstm = self.bilstm.backward(&cache.xs, &cache.bicache, &dhs, &mut g.bilstm);
        dxs += &dxs_lstm;
        self.embedding.backward(ids, &dxs, &mut g.embedding);
    }

    fn entries(&self) -> Vec<Entry<'_>> {
        let mut v = self.embedding.entries("embedding");
        v.extend(self.bilstm.entries("bilstm"));
        v.extend(self.attention.entries("attention"));
        v.extend(self.proj.entries("proj"));
        for (k, bank) in self.banks.iter().enumerate() {
            v.extend(bank.entries(&format!("bank{k}_w{}", bank.width)));
        }
        v.extend(self.out.entries("out"));
        v
    }

    fn entries_mut(&mut self) -> Vec<EntryMut<'_>> {
        let mut v = self.embedding.entries_mut("embedding");
        v.extend(self.bilstm.entries_mut("bilstm"));
        v.extend(self.attention.entries_mut("attention"));
        v.extend(self.proj.entries_mut("proj"));
        for (k, bank) in self.banks.iter_mut().enumerate() {
            let prefix = format!("bank{k}_w{}", bank.width);
            v.extend(bank.entries_mut(&prefix));
        }
        v.extend(self.out.entries_mut("out"));
        v
    }
}

// --- Unified parameter enum ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum BaselineParams {
    Bilstm(BilstmAttnParams),
    Cnn(Cnn1dParams),
    Han(HanParams),
    Rcnn(RcnnParams),
    Amcnn(AmcnnParams),
}

pub(crate) enum RunCache {
    Bilstm(BilstmRunCache),
    Cnn(CnnRunCache),
    Han(HanRunCache),
    Rcnn(RcnnRunCache),
    Amcnn(AmcnnRunCache),
}

fn expect_flat(input: &EncodedPost) -> &[usize] {
    match input {
        EncodedPost::Flat(ids) => ids,
        EncodedPost::Sentences(_) => unreachable!("flat architecture fed sentence encoding"),
    }
}

impl BaselineParams {
    pub fn init(cfg: &BaselineConfig, vocab_len: usize, seed: u64) -> Self {
        match cfg.kind {
            BaselineKind::BilstmAttn => Self::Bilstm(BilstmAttnParams::init(cfg, vocab_len, seed)),
            BaselineKind::Cnn1d => Self::Cnn(Cnn1dParams::init(cfg, vocab_len, seed)),
            BaselineKind::Han => Self::Han(HanParams::init(cfg, vocab_len, seed)),
            BaselineKind::Rcnn => Self::Rcnn(RcnnParams::init(cfg, vocab_len, seed)),
            BaselineKind::Amcnn => Self::Amcnn(AmcnnParams::init(cfg, vocab_len, seed)),
        }
    }

    pub fn run(
        &self,
        input: &EncodedPost,
        dropout: Option<(&mut ChaCha8Rng, f64)>,
    ) -> (Array1<f64>, RunCache) {
        match self {
            Self::Bilstm(p) => {
                let (l, c) = p.run(expect_flat(input), dropout);
                (l, RunCache::Bilstm(c))
            }
            Self::Cnn(p) => {
                let (l, c) = p.run(expect_flat(input), dropout);
                (l, RunCache::Cnn(c))
            }
            Self::Han(p) => match input {
                EncodedPost::Sentences(sentences) => {
                    let (l, c) = p.run(sentences, dropout);
                    (l, RunCache::Han(c))
                }
                EncodedPost::Flat(_) => unreachable!("hierarchical architecture fed flat encoding"),
            },
            Self::Rcnn(p) => {
                let (l, c) = p.run(expect_flat(input), dropout);
                (l, RunCache::Rcnn(c))
            }
            Self::Amcnn(p) => {
                let (l, c) = p.run(expect_flat(input), dropout);
                (l, RunCache::Amcnn(c))
            }
        }
    }

    pub fn backprop(
        &self,
        input: &EncodedPost,
        cache: &RunCache,
        dlogits: &Array1<f64>,
        g: &mut Self,
    ) {
        match (self, cache, g) {
            (Self::Bilstm(p), RunCache::Bilstm(c), Self::Bilstm(g)) => {
                p.backprop(expect_flat(input), c, dlogits, g)
            }
            (Self::Cnn(p), RunCache::Cnn(c), Self::Cnn(g)) => {
                p.backprop(expect_flat(input), c, dlogits, g)
            }
            (Self::Han(p), RunCache::Han(c), Self::Han(g)) => match input {
                EncodedPost::Sentences(s) => p.backprop(s, c, dlogits, g),
                EncodedPost::Flat(_) => unreachable!("hierarchical architecture fed flat encoding"),
            },
            (Self::Rcnn(p), RunCache::Rcnn(c), Self::Rcnn(g)) => {
                p.backprop(expect_flat(input), c, dlogits, g)
            }
            (Self::Amcnn(p), RunCache::Amcnn(c), Self::Amcnn(g)) => {
                p.backprop(expect_flat(input), c, dlogits, g)
            }
            _ => unreachable!("mismatched parameter/cache/grad kinds"),
        }
    }

    pub fn entries(&self) -> Vec<Entry<'_>> {
        match self {
            Self::Bilstm(p) => p.entries(),
            Self::Cnn(p) => p.entries(),
            Self::Han(p) => p.entries(),
            Self::Rcnn(p) => p.entries(),
            Self::Amcnn(p) => p.entries(),
        }
    }

    pub fn entries_mut(&mut self) -> Vec<EntryMut<'_>> {
        match self {
            Self::Bilstm(p) => p.entries_mut(),
            Self::Cnn(p) => p.entries_mut(),
            Self::Han(p) => p.entries_mut(),
            Self::Rcnn(p) => p.entries_mut(),
            Self::Amcnn(p) => p.entries_mut(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut clone = self.clone();
        for (_, slice, _) in clone.entries_mut() {
            for v in slice.iter_mut() {
                *v = 0.0;
            }
        }
        clone
    }

    pub fn attention_alpha(&self, cache: &RunCache) -> Option<Vec<f64>> {
        match cache {
            RunCache::Bilstm(c) => Some(c.attn.alpha.to_vec()),
            RunCache::Amcnn(c) => Some(c.attn.alpha.to_vec()),
            RunCache::Han(c) => Some(c.sent_attn.alpha.to_vec()),
            _ => None,
        }
    }

    pub fn pooled(&self, cache: &RunCache) -> Option<Vec<f64>> {
        match cache {
            RunCache::Cnn(c) => Some(c.feat0.to_vec()),
            RunCache::Amcnn(c) => Some(c.feat0.to_vec()),
            _ => None,
        }
    }
}

// --- Model wrapper -------------------------------------------------------------------

/// A baseline classifier: architecture parameters plus the vocabulary they
/// were built over.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    pub config: BaselineConfig,
    vocab: Vocab,
    pub(crate) params: BaselineParams,
    pub(crate) max_seq_len: usize,
}

/// Builds an untrained baseline of the configured kind.
pub fn build_baseline(cfg: &BaselineConfig, vocab: Vocab, seed: u64) -> Result<BaselineModel> {
    cfg.validate()?;
    let params = BaselineParams::init(cfg, vocab.len(), seed);
    Ok(BaselineModel {
        config: cfg.clone(),
        vocab,
        params,
        max_seq_len: DEFAULT_MAX_SEQ_LEN,
    })
}

impl BaselineModel {
    /// The name predictions are recorded under.
    pub fn model_name(&self) -> &'static str {
        self.config.kind.as_str()
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn max_seq_len(&self) -> usize {
        self.max_seq_len
    }

    pub(crate) fn encode(&self, text: &str) -> EncodedPost {
        encode_post(&self.vocab, self.config.kind, text, self.max_seq_len)
    }

    fn probabilities_for(&self, logits: &Array1<f64>) -> Result<ClassProbabilities> {
        let p = softmax1(logits);
        ClassProbabilities::new(p[0], p[1]).map_err(BaselineError::from)
    }

    /// Class probabilities for raw texts, in input order.
    pub fn predict_texts(&self, texts: &[&str]) -> Result<Vec<ClassProbabilities>> {
        texts
            .iter()
            .map(|text| {
                let (logits, _) = self.params.run(&self.encode(text), None);
                self.probabilities_for(&logits)
            })
            .collect()
    }

    /// Order-preserving predictions for labeled posts.
    pub fn predict_batch(&self, posts: &[LabeledPost]) -> Result<Vec<PredictionRecord>> {
        if posts.is_empty() {
            return Err(BaselineError::Argument(
                "predict_batch needs at least one post".into(),
            ));
        }
        posts
            .iter()
            .map(|post| {
                let (logits, _) = self.params.run(&self.encode(&post.text), None);
                let probs = self.probabilities_for(&logits)?;
                Ok(PredictionRecord::new(
                    post.id.clone(),
                    self.model_name().to_string(),
                    probs,
                ))
            })
            .collect()
    }

    /// The model's primary attention distribution for one text: over tokens
    /// for the recurrent-attention and multichannel kinds, over sentences for
    /// the hierarchical kind, `None` for kinds without attention.
    pub fn attention_weights(&self, text: &str) -> Result<Option<Vec<f64>>> {
        let (_, cache) = self.params.run(&self.encode(text), None);
        Ok(self.params.attention_alpha(&cache))
    }

    /// Global max-pooled feature vector for convolutional kinds.
    pub fn pooled_features(&self, text: &str) -> Result<Option<Vec<f64>>> {
        let (_, cache) = self.params.run(&self.encode(text), None);
        Ok(self.params.pooled(&cache))
    }

    /// Named tensor shapes in canonical order.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.params
            .entries()
            .into_iter()
            .map(|(name, shape, _, _)| (name, shape))
            .collect()
    }

    /// Content hash over the architecture config, vocabulary, and every
    /// parameter value.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_string(&self.config).expect("config serializes"));
        for i in 0..self.vocab.len() {
            hasher.update(self.vocab.token(i).expect("contiguous").as_bytes());
            hasher.update([0u8]);
        }
        hasher.update(self.max_seq_len.to_le_bytes());
        for (name, shape, data, _) in self.params.entries() {
            hasher.update(name.as_bytes());
            for dim in shape {
                hasher.update(dim.to_le_bytes());
            }
            for v in data {
                hasher.update(v.to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    /// Writes `manifest.json`, `vocab.tsv`, and `tensors.bin` (the named
    /// tensor container used by the dense-network checkpoints, with the
    /// embedding matrix as its first tensor).
    pub fn save(
        &self,
        dir: &Path,
        config_echo: Option<serde_json::Value>,
    ) -> Result<BaselineManifest> {
        fs::create_dir_all(dir)?;
        self.vocab.save(&dir.join("vocab.tsv"))?;
        let entries = self.params.entries();
        let mut blob = Vec::new();
        let mut tensors = Vec::with_capacity(entries.len());
        let mut total = 0usize;
        for (name, shape, data, _) in &entries {
            tensors.push(TensorSpec {
                name: name.clone(),
                shape: shape.clone(),
            });
            total += data.len();
            for v in *data {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
        let manifest = BaselineManifest {
            format_version: CHECKPOINT_FORMAT_VERSION,
            kind: self.config.kind,
            config: self.config.clone(),
            max_seq_len: self.max_seq_len,
            tensors,
            total_scalars: total,
            fingerprint: self.fingerprint(),
            config_echo,
        };
        fs::write(dir.join("tensors.bin"), &blob)?;
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(manifest)
    }

    pub fn load(dir: &Path) -> Result<(BaselineModel, BaselineManifest)> {
        let manifest: BaselineManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(BaselineError::Checkpoint(format!(
                "unsupported checkpoint format {}",
                manifest.format_version
            )));
        }
        let vocab = Vocab::load(&dir.join("vocab.tsv"))?;
        let mut model = build_baseline(&manifest.config, vocab, 0)?;
        model.max_seq_len = manifest.max_seq_len;
        let blob = fs::read(dir.join("tensors.bin"))?;
        if blob.len() != manifest.total_scalars * 8 {
            return Err(BaselineError::Checkpoint(format!(
                "tensors.bin holds {} bytes, manifest expects {}",
                blob.len(),
                manifest.total_scalars * 8
            )));
        }
        let mut offset = 0usize;
        let mut spec_iter = manifest.tensors.iter();
        for (name, slice, _) in model.params.entries_mut() {
            let spec = spec_iter.next().ok_or_else(|| {
                BaselineError::Checkpoint("checkpoint lists fewer tensors than the model".into())
            })?;
            if spec.name != name {
                return Err(BaselineError::Checkpoint(format!(
                    "tensor order mismatch: model has {name:?}, checkpoint has {:?}",
                    spec.name
                )));
            }
            for v in slice.iter_mut() {
                let mut bytes = [0u8; 8];
                bytes.copy_from_slice(&blob[offset..offset + 8]);
                *v = f64::from_le_bytes(bytes);
                offset += 8;
            }
        }
        if spec_iter.next().is_some() {
            return Err(BaselineError::Checkpoint(
                "checkpoint lists more tensors than the model".into(),
            ));
        }
        if model.fingerprint() != manifest.fingerprint {
            return Err(BaselineError::Checkpoint(
                "checkpoint fingerprint does not match the loaded parameters".into(),
            ));
        }
        Ok((model, manifest))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineManifest {
    pub format_version: u32,
    pub kind: BaselineKind,
    pub config: BaselineConfig,
    pub max_seq_len: usize,
    pub tensors: Vec<TensorSpec>,
    pub total_scalars: usize,
    pub fingerprint: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_echo: Option<serde_json::Value>,
}
