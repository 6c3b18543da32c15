//! The experiment configuration: a strict TOML schema where every omitted
//! key falls back to a documented default, so the manifest's config echo is
//! always fully resolved.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fakestack_backbones::{BackboneId, BackboneName, SizeClass, TrainConfig};
use fakestack_data::{FormatHint, PreprocessOptions};
use fakestack_ensemble::{define_variant, EnsembleVariant, MetaKind, MetaSource};
use fakestack_nn::MlpHeadConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::Result;

pub const DEFAULT_VARIANT: &str = "v3";

/// Fully-resolved experiment description. Parse with [`load_config`]; the
/// raw file may omit any key with a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run directory name; derived from the config content when absent.
    pub run_id: Option<String>,
    /// Global seed; member i trains with `seed + i`.
    pub seed: u64,
    /// Parent directory that run directories are created under.
    pub out: PathBuf,
    /// Never touch the network; weights come from the local cache only.
    pub offline: bool,
    /// `base` or `small-proxy` backbones.
    pub size_class: String,
    /// Upper bound on concurrently training members.
    pub max_parallel_members: usize,
    /// Reuse artifacts whose input fingerprints are unchanged.
    pub resume: bool,
    pub data: DataSection,
    pub preprocess: PreprocessOptions,
    pub ensemble: EnsembleSection,
    pub head: MlpHeadConfig,
    pub train: TrainSection,
    /// Per-member overrides of the `[train]` section, keyed by member name.
    pub overrides: BTreeMap<String, TrainOverride>,
    pub meta: MetaSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            run_id: None,
            seed: 42,
            out: PathBuf::from("runs"),
            offline: true,
            size_class: SizeClass::SmallProxy.as_str().to_string(),
            max_parallel_members: 1,
            resume: true,
            data: DataSection::default(),
            preprocess: PreprocessOptions::default(),
            ensemble: EnsembleSection::default(),
            head: MlpHeadConfig::default(),
            train: TrainSection::default(),
            overrides: BTreeMap::new(),
            meta: MetaSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub train: PathBuf,
    pub validation: PathBuf,
    pub test: PathBuf,
    /// Optional fact-check export merged into the training split.
    pub external: Option<PathBuf>,
    /// `auto`, `csv`, or `tsv`.
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    /// One of `v1`, `v2`, `v3`. Mutually exclusive with `members`.
    pub variant: Option<String>,
    /// Explicit member list (a custom variant).
    pub members: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub max_seq_len: usize,
    pub force_learning_rate: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            learning_rate: base.learning_rate,
            epochs: base.epochs,
            batch_size: base.batch_size,
            early_stop_patience: base.early_stop_patience,
            max_seq_len: base.max_seq_len,
            force_learning_rate: base.force_learning_rate,
        }
    }
}

/// Sparse per-member override; unset keys inherit the `[train]` section.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverride {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub early_stop_patience: Option<usize>,
    pub max_seq_len: Option<usize>,
    pub force_learning_rate: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaSection {
    /// `neural`, `random_forest`, or `svm`.
    pub kind: String,
    /// Where meta-training rows come from: `paper`, `val`, or `oof`.
    pub source: String,
    /// Fold count for `oof`.
    pub k: usize,
}

impl Default for MetaSection {
    fn default() -> Self {
        Self {
            kind: MetaKind::Neural.as_str().to_string(),
            source: MetaSource::default().as_str().to_string(),
            k: fakestack_ensemble::OOF_DEFAULT_FOLDS,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub offline: Option<bool>,
    pub resume: Option<bool>,
    pub size_class: Option<String>,
}

impl ExperimentConfig {
    /// The ordered member list (variant members, or the explicit list).
    pub fn member_names(&self) -> Result<Vec<String>> {
        if let Some(members) = &self.ensemble.members {
            return Ok(members.clone());
        }
        let name = self.ensemble.variant.as_deref().unwrap_or(DEFAULT_VARIANT);
        Ok(self.lookup_variant(name)?.members)
    }

    /// The ensemble variant these members form.
    pub fn variant(&self) -> Result<EnsembleVariant> {
        if let Some(members) = &self.ensemble.members {
            return EnsembleVariant::custom(members.clone()).map_err(Into::into);
        }
        let name = self.ensemble.variant.as_deref().unwrap_or(DEFAULT_VARIANT);
        self.lookup_variant(name)
    }

    fn lookup_variant(&self, name: &str) -> Result<EnsembleVariant> {
        define_variant(name).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn size_class(&self) -> Result<SizeClass> {
        SizeClass::from_str(&self.size_class).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn backbone_id(&self, member: &str) -> Result<BackboneId> {
        let name = BackboneName::from_str(member).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(BackboneId {
            name,
            size_class: self.size_class()?,
        })
    }

    /// The training configuration member `index` actually runs with: the
    /// `[train]` section, the member's override, and the fanned-out seed.
    pub fn train_config_for(&self, member: &str, index: usize) -> TrainConfig {
        let o = self.overrides.get(member).cloned().unwrap_or_default();
        TrainConfig {
            learning_rate: o.learning_rate.unwrap_or(self.train.learning_rate),
            epochs: o.epochs.unwrap_or(self.train.epochs),
            batch_size: o.batch_size.unwrap_or(self.train.batch_size),
            seed: self.seed.wrapping_add(index as u64),
            early_stop_patience: o.early_stop_patience.unwrap_or(self.train.early_stop_patience),
            max_seq_len: o.max_seq_len.unwrap_or(self.train.max_seq_len),
            force_learning_rate: o
                .force_learning_rate
                .unwrap_or(self.train.force_learning_rate),
        }
    }

    pub fn meta_kind(&self) -> Result<MetaKind> {
        MetaKind::from_str(&self.meta.kind).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn meta_source(&self) -> Result<MetaSource> {
        MetaSource::from_str(&self.meta.source).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn format_hint(&self) -> Result<FormatHint> {
        match self.data.format.as_deref() {
            None | Some("auto") => Ok(FormatHint::Auto),
            Some("csv") => Ok(FormatHint::Csv),
            Some("tsv") => Ok(FormatHint::Tsv),
            Some(other) => Err(CliError::Config(format!(
                "data.format must be auto, csv, or tsv, got {other:?}"
            ))),
        }
    }

    /// The run directory name: the explicit `run_id`, or `run-` plus the
    /// first 12 hex digits of a hash over the result-affecting keys, so
    /// identical experiments land in (and resume from) the same directory
    /// while execution knobs like `resume` or parallelism never fork it.
    pub fn run_id(&self) -> String {
        if let Some(id) = &self.run_id {
            return id.clone();
        }
        let identity = serde_json::json!({
            "seed": self.seed,
            "size_class": self.size_class,
            "data": self.data,
            "preprocess": self.preprocess,
            "ensemble": self.ensemble,
            "head": self.head,
            "train": self.train,
            "overrides": self.overrides,
            "meta": self.meta,
        });
        let digest = Sha256::digest(identity.to_string().as_bytes());
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        format!("run-{hex}")
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out.join(self.run_id())
    }

    /// Collects every invariant violation; an empty result means valid.
    fn violations(&self) -> Vec<String> {
        let mut problems = Vec::new();

        for (key, path, required) in [
            ("data.train", Some(&self.data.train), true),
            ("data.validation", Some(&self.data.validation), true),
            ("data.test", Some(&self.data.test), true),
            ("data.external", self.data.external.as_ref(), false),
        ] {
            match path {
                Some(p) if p.as_os_str().is_empty() => {
                    problems.push(format!("{key} is required"));
                }
                Some(p) if !p.exists() => {
                    problems.push(format!("{key} path {} does not exist", p.display()));
                }
                Some(_) => {}
                None if required => problems.push(format!("{key} is required")),
                None => {}
            }
        }
        if let Err(e) = self.format_hint() {
            problems.push(e.to_string());
        }

        match (&self.ensemble.variant, &self.ensemble.members) {
            (Some(_), Some(_)) => problems.push(
                "ensemble.variant and ensemble.members are mutually exclusive".to_string(),
            ),
            (Some(name), None) => {
                if let Err(e) = self.lookup_variant(name) {
                    problems.push(e.to_string());
                }
            }
            (None, Some(members)) => {
                if members.is_empty() {
                    problems.push("ensemble.members must not be empty".to_string());
                }
                let mut seen = std::collections::BTreeSet::new();
                for m in members {
                    if BackboneName::from_str(m).is_err() {
                        let known: Vec<&str> =
                            BackboneName::ALL.iter().map(|n| n.as_str()).collect();
                        problems.push(format!("unknown member {m:?} (known: {known:?})"));
                    }
                    if !seen.insert(m.as_str()) {
                        problems.push(format!("duplicate member {m:?}"));
                    }
                }
            }
            (None, None) => {}
        }

        if let Ok(members) = self.member_names() {
            for name in self.overrides.keys() {
                if !members.iter().any(|m| m == name) {
                    problems.push(format!(
                        "overrides.{name} does not match any configured member"
                    ));
                }
            }
            for (i, member) in members.iter().enumerate() {
                if let Err(e) = self.train_config_for(member, i).validate() {
                    problems.push(format!("train settings for {member}: {e}"));
                }
            }
        }

        if let Err(e) = self.head.validate() {
            problems.push(format!("head: {e}"));
        }
        if let Err(e) = self.size_class() {
            problems.push(e.to_string());
        }
        if self.max_parallel_members == 0 {
            problems.push("max_parallel_members must be at least 1".to_string());
        }
        if let Err(e) = self.meta_kind() {
            problems.push(e.to_string());
        }
        match self.meta_source() {
            Err(e) => problems.push(e.to_string()),
            Ok(MetaSource::Oof) if self.meta.k < 2 => {
                problems.push(format!("meta.k must be at least 2 in oof mode, got {}", self.meta.k));
            }
            Ok(_) => {}
        }

        problems
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.violations();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }
}

fn resolve_path(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&p);
    }
}

/// Parses, applies command-line overrides, resolves relative paths against
/// the config file's directory, and validates.
pub fn load_config(path: &Path, overrides: &CliOverrides) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut cfg: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;

    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.out = out.clone();
    }
    if let Some(offline) = overrides.offline {
        cfg.offline = offline;
    }
    if let Some(resume) = overrides.resume {
        cfg.resume = resume;
    }
    if let Some(size_class) = &overrides.size_class {
        cfg.size_class = size_class.clone();
    }

    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve_path(base, &mut cfg.data.train);
    resolve_path(base, &mut cfg.data.validation);
    resolve_path(base, &mut cfg.data.test);
    if let Some(external) = &mut cfg.data.external {
        resolve_path(base, external);
    }
    if overrides.out.is_none() {
        resolve_path(base, &mut cfg.out);
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Parses and validates a config file with no command-line overrides.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig> {
    load_config(path, &CliOverrides::default())
}
