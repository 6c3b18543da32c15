//! The trained unit of the system: one backbone plus its classification
//! head, with batch encoding, prediction, and a checkpoint directory layout.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fakestack_data::LabeledPost;
use fakestack_nn::{self as nn, NetworkParams, PredictionRecord};

use crate::encoder::{hex_string, pool, EncoderParams};
use crate::provider::{load_pretrained, save_pretrained, PretrainedBackbone};
use crate::registry::{BackboneId, Pooling};
use crate::tokenizer::{pad_batch, TokenizerSpec};
use crate::{BackboneError, Result};

/// Indices of texts that tokenized to zero word tokens and were encoded with
/// the tokenizer's empty-sequence convention.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodeDiagnostics {
    pub empty_text_indices: Vec<usize>,
}

/// Number of posts encoded per forward chunk.
const ENCODE_CHUNK: usize = 64;

/// Encodes a batch of texts into pooled feature vectors (N × hidden width).
/// Deterministic; padding is per chunk and masked out, so results do not
/// depend on batch composition.
pub fn encode_batch(
    backbone: &PretrainedBackbone,
    texts: &[&str],
    max_seq_len: usize,
    pooling: Pooling,
) -> Result<(Array2<f64>, EncodeDiagnostics)> {
    if texts.is_empty() {
        return Err(BackboneError::Argument(
            "encode_batch requires a non-empty list of texts".into(),
        ));
    }
    let width = backbone.hidden_width();
    let mut features = Array2::zeros((texts.len(), width));
    let mut diagnostics = EncodeDiagnostics::default();
    let mut row = 0;
    for chunk in texts.chunks(ENCODE_CHUNK) {
        let tokenized = chunk
            .iter()
            .map(|t| backbone.tokenizer.encode(t, max_seq_len))
            .collect::<Result<Vec<_>>>()?;
        for (offset, post) in tokenized.iter().enumerate() {
            if post.was_empty {
                diagnostics.empty_text_indices.push(row + offset);
            }
        }
        for (offset, (ids, mask)) in pad_batch(&backbone.tokenizer, &tokenized)
            .iter()
            .enumerate()
        {
            let hidden = backbone.encoder.encode_sequence(ids, mask)?;
            features
                .row_mut(row + offset)
                .assign(&pool(&hidden, mask, pooling));
        }
        row += chunk.len();
    }
    if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
        return Err(BackboneError::Argument(format!(
            "encoder produced a non-finite feature value {bad}"
        )));
    }
    Ok((features, diagnostics))
}

/// A fine-tuned backbone + head pair, ready for prediction.
#[derive(Debug, Clone)]
pub struct TrainedBaseModel {
    pub backbone: BackboneId,
    pub encoder: EncoderParams,
    pub tokenizer: TokenizerSpec,
    pub head: NetworkParams,
    pub pooling: Pooling,
    pub max_seq_len: usize,
}

impl TrainedBaseModel {
    /// The name predictions are recorded under (the backbone family).
    pub fn model_name(&self) -> &'static str {
        self.backbone.name.as_str()
    }

    /// Content hash over every parameter of the encoder and the head plus
    /// the pieces of configuration that change model behavior.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.backbone.to_string().as_bytes());
        hasher.update(self.encoder.fingerprint().as_bytes());
        hasher.update(nn::fingerprint(&self.head).as_bytes());
        hasher.update(self.pooling.as_str().as_bytes());
        hasher.update((self.max_seq_len as u64).to_le_bytes());
        hasher.update((self.tokenizer.vocab_size as u64).to_le_bytes());
        hasher.update(self.tokenizer.salt.to_le_bytes());
        hex_string(&hasher.finalize())
    }

    /// Pooled features for a list of texts (evaluation mode).
    pub fn features(&self, texts: &[&str]) -> Result<(Array2<f64>, EncodeDiagnostics)> {
        let pb = PretrainedBackbone {
            id: self.backbone,
            encoder: self.encoder.clone(),
            tokenizer: self.tokenizer,
        };
        encode_batch(&pb, texts, self.max_seq_len, self.pooling)
    }

    /// One prediction per post, in input order, evaluation mode throughout.
    pub fn predict_batch(&self, posts: &[LabeledPost]) -> Result<Vec<PredictionRecord>> {
        if posts.is_empty() {
            return Err(BackboneError::Argument(
                "predict_batch requires a non-empty list of posts".into(),
            ));
        }
        let texts: Vec<&str> = posts.iter().map(|p| p.text.as_str()).collect();
        let (features, _) = self.features(&texts)?;
        let mut records = Vec::with_capacity(posts.len());
        for chunk in (0..posts.len()).collect::<Vec<_>>().chunks(ENCODE_CHUNK) {
            let rows = features.select(Axis(0), chunk);
            let probs = self.head.probabilities(&rows.view())?;
            for (&i, p) in chunk.iter().zip(probs) {
                records.push(PredictionRecord::new(
                    posts[i].id.clone(),
                    self.model_name().to_string(),
                    p,
                ));
            }
        }
        Ok(records)
    }

    /// Writes the model as a directory: `backbone/` (provider-native
    /// encoder container), `head/` (head-module container), and a top-level
    /// manifest tying them together.
    pub fn save(&self, dir: &Path, config_echo: Option<serde_json::Value>) -> Result<ModelManifest> {
        fs::create_dir_all(dir)?;
        let pb = PretrainedBackbone {
            id: self.backbone,
            encoder: self.encoder.clone(),
            tokenizer: self.tokenizer,
        };
        save_pretrained(&pb, &dir.join("backbone"))?;
        nn::save_network(&self.head, &dir.join("head"), None)?;
        let manifest = ModelManifest {
            format_version: 1,
            backbone: self.backbone.name.as_str().to_string(),
            size_class: self.backbone.size_class.as_str().to_string(),
            pooling: self.pooling.as_str().to_string(),
            max_seq_len: self.max_seq_len,
            config_echo,
            fingerprint: self.fingerprint(),
        };
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(manifest)
    }

    /// Loads a model directory written by [`TrainedBaseModel::save`],
    /// verifying the combined fingerprint.
    pub fn load(dir: &Path) -> Result<(TrainedBaseModel, ModelManifest)> {
        let manifest: ModelManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.format_version != 1 {
            return Err(BackboneError::Checkpoint(format!(
                "unsupported model format_version {}",
                manifest.format_version
            )));
        }
        let pb = load_pretrained(&dir.join("backbone"))?;
        let (head, _) = nn::load_network(&dir.join("head"))?;
        let model = TrainedBaseModel {
            backbone: pb.id,
            encoder: pb.encoder,
            tokenizer: pb.tokenizer,
            head,
            pooling: manifest.pooling.parse()?,
            max_seq_len: manifest.max_seq_len,
        };
        let actual = model.fingerprint();
        if actual != manifest.fingerprint {
            return Err(BackboneError::Checkpoint(format!(
                "model fingerprint mismatch: manifest {} vs content {}",
                manifest.fingerprint, actual
            )));
        }
        Ok((model, manifest))
    }
}

/// Top-level manifest of a model checkpoint directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub backbone: String,
    pub size_class: String,
    pub pooling: String,
    pub max_seq_len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_echo: Option<serde_json::Value>,
    pub fingerprint: String,
}
