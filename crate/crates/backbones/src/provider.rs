//! Backbone weight resolution: a provider trait in front of a local cache
//! directory, plus the on-disk container format for encoder weights.
//!
//! Small-proxy backbones are materialized deterministically from the proxy
//! architecture table when absent from the cache (pure computation, no
//! network). Base-class weights are only ever read from the cache; importing
//! them is out of scope for this build, so a missing base checkpoint is an
//! availability error that explains where the loader looked.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderConfig, EncoderParams};
use crate::registry::{base_hidden_width, BackboneId, BackboneName, SizeClass};
use crate::tokenizer::TokenizerSpec;
use crate::{BackboneError, Result};

/// Environment variable naming the weights cache directory.
pub const WEIGHTS_DIR_ENV: &str = "FAKESTACK_WEIGHTS_DIR";
/// Environment variable overriding the proxy architecture table path.
pub const PROXIES_ENV: &str = "FAKESTACK_PROXIES";

const EMBEDDED_PROXIES: &str = include_str!("../../../configs/proxies.toml");

/// Architecture and identity of one family's small proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxySpec {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_positions: usize,
    pub salt: u64,
    pub seed: u64,
}

impl ProxySpec {
    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            vocab_size: self.vocab_size,
            d_model: self.d_model,
            n_heads: self.n_heads,
            n_layers: self.n_layers,
            d_ff: self.d_ff,
            max_positions: self.max_positions,
        }
    }
}

/// The family → proxy-architecture mapping, loaded from a TOML file rather
/// than hard-coded.
#[derive(Debug, Clone)]
pub struct ProxyTable {
    specs: BTreeMap<BackboneName, ProxySpec>,
}

impl ProxyTable {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, ProxySpec> = toml::from_str(text)?;
        let mut specs = BTreeMap::new();
        for (key, spec) in raw {
            let name: BackboneName = key.parse()?;
            spec.encoder_config().validate()?;
            specs.insert(name, spec);
        }
        Ok(Self { specs })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    /// The table compiled in from the repository's configs directory.
    pub fn builtin() -> Self {
        Self::from_toml_str(EMBEDDED_PROXIES).expect("embedded proxy table parses")
    }

    pub fn get(&self, name: BackboneName) -> Option<&ProxySpec> {
        self.specs.get(&name)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }
}

/// Resolved backbone weights plus the tokenizer that goes with them.
#[derive(Debug, Clone)]
pub struct PretrainedBackbone {
    pub id: BackboneId,
    pub encoder: EncoderParams,
    pub tokenizer: TokenizerSpec,
}

impl PretrainedBackbone {
    pub fn hidden_width(&self) -> usize {
        self.encoder.hidden_width()
    }
}

/// Source of backbone weights. Implementations must be deterministic: two
/// fetches of the same id yield identical parameters.
pub trait WeightsProvider {
    fn fetch(&self, id: &BackboneId) -> Result<PretrainedBackbone>;
}

/// Filesystem-backed provider over a cache directory.
#[derive(Debug, Clone)]
pub struct FsProvider {
    cache_dir: PathBuf,
    offline: bool,
    proxies: ProxyTable,
}

impl FsProvider {
    /// `cache_dir` falls back to the `FAKESTACK_WEIGHTS_DIR` environment
    /// variable, then to `.fakestack/weights` under the working directory.
    /// The proxy table comes from `FAKESTACK_PROXIES` when set, otherwise
    /// the compiled-in copy.
    pub fn new(cache_dir: Option<PathBuf>, offline: bool) -> Result<Self> {
        let cache_dir = cache_dir
            .or_else(|| env::var_os(WEIGHTS_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".fakestack/weights"));
        let proxies = match env::var_os(PROXIES_ENV) {
            Some(path) => ProxyTable::from_path(Path::new(&path))?,
            None => ProxyTable::builtin(),
        };
        Ok(Self {
            cache_dir,
            offline,
            proxies,
        })
    }

    pub fn with_proxies(cache_dir: PathBuf, offline: bool, proxies: ProxyTable) -> Self {
        Self {
            cache_dir,
            offline,
            proxies,
        }
    }

    pub fn cache_dir(&self) -> &Path {
        &self.cache_dir
    }

    fn entry_dir(&self, id: &BackboneId) -> PathBuf {
        self.cache_dir.join(id.to_string())
    }
}

impl WeightsProvider for FsProvider {
    fn fetch(&self, id: &BackboneId) -> Result<PretrainedBackbone> {
        let dir = self.entry_dir(id);
        if dir.join("manifest.json").is_file() {
            let pb = load_pretrained(&dir)?;
            if pb.id != *id {
                return Err(BackboneError::Checkpoint(format!(
                    "cache entry {} holds weights for {}, expected {}",
                    dir.display(),
                    pb.id,
                    id
                )));
            }
            return Ok(pb);
        }
        match id.size_class {
            SizeClass::SmallProxy => {
                let spec = self.proxies.get(id.name).ok_or_else(|| {
                    BackboneError::Availability {
                        backbone: id.to_string(),
                        reason: "no proxy architecture entry for this family in the proxy table"
                            .into(),
                    }
                })?;
                let encoder = EncoderParams::init(spec.encoder_config(), spec.seed)?;
                let tokenizer = TokenizerSpec::new(id.name, spec.vocab_size, spec.salt)?;
                let pb = PretrainedBackbone {
                    id: *id,
                    encoder,
                    tokenizer,
                };
                save_pretrained(&pb, &dir)?;
                Ok(pb)
            }
            SizeClass::Base => Err(BackboneError::Availability {
                backbone: id.to_string(),
                reason: format!(
                    "no cached weights at {}; import base-class weights into the cache \
                     directory ({} controls its location){}",
                    dir.display(),
                    WEIGHTS_DIR_ENV,
                    if self.offline {
                        "; offline mode forbids network access"
                    } else {
                        "; this build has no network fetcher"
                    }
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorSpec {
    name: String,
    shape: Vec<usize>,
}

/// Manifest of the provider-native encoder container: `manifest.json` next
/// to `tensors.bin` (raw little-endian f64 in the canonical tensor order).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainedManifest {
    pub format_version: u32,
    pub backbone: String,
    pub size_class: String,
    pub config: EncoderConfig,
    pub tokenizer_vocab_size: usize,
    pub tokenizer_salt: u64,
    pub seed: u64,
    tensors: Vec<TensorSpec>,
    pub total_scalars: usize,
    pub fingerprint: String,
}

/// Writes a backbone into `dir` in the provider-native format.
pub fn save_pretrained(pb: &PretrainedBackbone, dir: &Path) -> Result<PretrainedManifest> {
    fs::create_dir_all(dir)?;
    let shapes = pb.encoder.named_shapes();
    let slices = pb.encoder.tensor_slices();
    let mut bytes = Vec::new();
    for slice in &slices {
        for v in *slice {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = PretrainedManifest {
        format_version: 1,
        backbone: pb.id.name.as_str().to_string(),
        size_class: pb.id.size_class.as_str().to_string(),
        config: pb.encoder.config,
        tokenizer_vocab_size: pb.tokenizer.vocab_size,
        tokenizer_salt: pb.tokenizer.salt,
        seed: pb.encoder.seed,
        tensors: shapes
            .iter()
            .map(|(name, shape, _)| TensorSpec {
                name: name.clone(),
                shape: shape.clone(),
            })
            .collect(),
        total_scalars: pb.encoder.flat_len(),
        fingerprint: pb.encoder.fingerprint(),
    };
    fs::write(dir.join("tensors.bin"), &bytes)?;
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Loads a backbone from the provider-native format, verifying tensor
/// layout, byte counts, the content fingerprint, and (for base-class
/// entries) the published hidden width.
pub fn load_pretrained(dir: &Path) -> Result<PretrainedBackbone> {
    let manifest: PretrainedManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.format_version != 1 {
        return Err(BackboneError::Checkpoint(format!(
            "unsupported format_version {}",
            manifest.format_version
        )));
    }
    let name: BackboneName = manifest.backbone.parse()?;
    let size_class: SizeClass = manifest.size_class.parse()?;
    if size_class == SizeClass::Base && manifest.config.d_model != base_hidden_width(name) {
        return Err(BackboneError::Checkpoint(format!(
            "base-class {} weights must have hidden width {}, found {}",
            name,
            base_hidden_width(name),
            manifest.config.d_model
        )));
    }

    let mut params = EncoderParams::zeros(manifest.config, manifest.seed)?;
    let expected = params.named_shapes();
    if expected.len() != manifest.tensors.len() {
        return Err(BackboneError::Checkpoint(format!(
            "tensor count mismatch: manifest lists {}, architecture has {}",
            manifest.tensors.len(),
            expected.len()
        )));
    }
    for ((name, shape, _), spec) in expected.iter().zip(&manifest.tensors) {
        if *name != spec.name || *shape != spec.shape {
            return Err(BackboneError::Checkpoint(format!(
                "tensor layout mismatch at '{}': manifest says '{}' {:?}",
                name, spec.name, spec.shape
            )));
        }
    }

    let bytes = fs::read(dir.join("tensors.bin"))?;
    let expected_len = params.flat_len() * 8;
    if bytes.len() != expected_len {
        return Err(BackboneError::Checkpoint(format!(
            "tensors.bin holds {} bytes, expected {}",
            bytes.len(),
            expected_len
        )));
    }
    let mut offset = 0;
    for (slice, _) in params.tensors_mut() {
        for v in slice.iter_mut() {
            *v = f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"));
            offset += 8;
        }
    }
    let actual_fp = params.fingerprint();
    if actual_fp != manifest.fingerprint {
        return Err(BackboneError::Checkpoint(format!(
            "fingerprint mismatch: manifest {} vs content {}",
            manifest.fingerprint, actual_fp
        )));
    }
    let tokenizer = TokenizerSpec::new(name, manifest.tokenizer_vocab_size, manifest.tokenizer_salt)?;
    Ok(PretrainedBackbone {
        id: BackboneId { name, size_class },
        encoder: params,
        tokenizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_proxy_table_covers_all_eight_families() {
        let table = ProxyTable::builtin();
        assert_eq!(table.len(), 8);
        for name in BackboneName::ALL {
            let spec = table.get(name).expect("family present");
            assert!(spec.max_positions >= 128);
        }
    }

    #[test]
    fn proxy_salts_and_seeds_are_pairwise_distinct() {
        let table = ProxyTable::builtin();
        let salts: std::collections::HashSet<u64> = BackboneName::ALL
            .iter()
            .map(|&n| table.get(n).unwrap().salt)
            .collect();
        let seeds: std::collections::HashSet<u64> = BackboneName::ALL
            .iter()
            .map(|&n| table.get(n).unwrap().seed)
            .collect();
        assert_eq!(salts.len(), 8);
        assert_eq!(seeds.len(), 8);
    }

    #[test]
    fn unknown_family_keys_are_rejected() {
        let err = ProxyTable::from_toml_str(
            "[gpt3]\nd_model = 8\nn_heads = 2\nn_layers = 1\nd_ff = 8\nvocab_size = 64\nmax_positions = 32\nsalt = 1\nseed = 1\n",
        )
        .unwrap_err();
        assert!(matches!(err, BackboneError::UnknownBackbone(_)));
    }
}
