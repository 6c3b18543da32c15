//! The experiment orchestrator. Stages communicate exclusively through
//! files under the run directory and each stage is skipped when its
//! recorded input fingerprint matches and all of its artifacts still exist,
//! so an interrupted or extended run picks up where it stopped.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fakestack_backbones::{
    fine_tune, FsProvider, TrainConfig, TrainedBaseModel, WeightsProvider,
};
use fakestack_data::{
    adapt_fakecovid, compute_stats, load_split, merge_splits, preprocess_text, DatasetSplit,
    FakeCovidOptions, SplitName,
};
use fakestack_ensemble::{
    build_meta_features, generate_oof_predictions, train_meta, MemberSpec, MetaConfig,
    MetaFeatureMatrix, MetaLearner, MetaSource,
};
use fakestack_metrics::{evaluate, render_report, EvaluationReport, ReportFormat};
use fakestack_nn::PredictionRecord;
use sha2::{Digest, Sha256};

use crate::cache::{cache_predictions, load_predictions};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::{DataBlock, MemberRecord, RunManifest, StageRecord, StageStatus};
use crate::Result;

/// Which split a prediction or report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKey {
    Train,
    Validation,
    Test,
}

impl SplitKey {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitKey::Train => "train",
            SplitKey::Validation => "validation",
            SplitKey::Test => "test",
        }
    }

    pub fn parse(raw: &str) -> Result<Self> {
        match raw {
            "train" => Ok(SplitKey::Train),
            "validation" | "val" => Ok(SplitKey::Validation),
            "test" => Ok(SplitKey::Test),
            other => Err(CliError::Config(format!(
                "unknown split {other:?} (expected train, validation, or test)"
            ))),
        }
    }
}

/// The loaded (and possibly merged / preprocessed) splits plus the content
/// fingerprint resumption decisions hang off.
struct PreparedData {
    train: DatasetSplit,
    validation: DatasetSplit,
    test: DatasetSplit,
    fingerprint: String,
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn file_sha(path: &Path) -> Result<String> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex_digest({
        let mut h = Sha256::new();
        h.update(&bytes);
        h
    }))
}

/// Order-sensitive combination of fingerprint parts.
fn combine(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for part in parts {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex_digest(h)
}

fn json_of<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("config values serialize")
}

pub struct Pipeline {
    cfg: ExperimentConfig,
    run_dir: PathBuf,
    manifest: RunManifest,
    data: Option<PreparedData>,
}

impl Pipeline {
    /// Opens (or creates) the run directory for this config and picks up
    /// any manifest a previous invocation left there.
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let run_id = cfg.run_id();
        let run_dir = cfg.run_dir();
        fs::create_dir_all(&run_dir)?;
        let manifest = match RunManifest::load(&run_dir) {
            Ok(mut previous) if previous.run_id == run_id => {
                previous.config = cfg.clone();
                previous.app_version = env!("CARGO_PKG_VERSION").to_string();
                previous
            }
            _ => RunManifest::new(run_id, cfg.clone()),
        };
        Ok(Self {
            cfg,
            run_dir,
            manifest,
            data: None,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn run_dir(&self) -> &Path {
        &self.run_dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn into_manifest(self) -> RunManifest {
        self.manifest
    }

    fn provider(&self) -> Result<FsProvider> {
        let cache = self.cfg.out.join("pretrained");
        FsProvider::new(Some(cache), self.cfg.offline).map_err(Into::into)
    }

    fn data(&self) -> Result<&PreparedData> {
        self.data.as_ref().ok_or_else(|| {
            CliError::Internal("data stage has not run in this invocation".into())
        })
    }

    fn split(&self, key: SplitKey) -> Result<&DatasetSplit> {
        let data = self.data()?;
        Ok(match key {
            SplitKey::Train => &data.train,
            SplitKey::Validation => &data.validation,
            SplitKey::Test => &data.test,
        })
    }

    /// True when resume is on, the stage's input fingerprint is unchanged,
    /// its previous status was successful, and every artifact still exists.
    fn can_skip(&self, stage: &str, fingerprint: &str, artifacts: &[PathBuf]) -> bool {
        if !self.cfg.resume {
            return false;
        }
        if self.manifest.fingerprints.get(stage).map(String::as_str) != Some(fingerprint) {
            return false;
        }
        let ok_status = self
            .manifest
            .stage(stage)
            .map(|s| matches!(s.status, StageStatus::Done | StageStatus::Cached))
            .unwrap_or(false);
        ok_status && artifacts.iter().all(|a| self.run_dir.join(a).exists())
    }

    fn finish_stage(
        &mut self,
        name: &str,
        fingerprint: String,
        status: StageStatus,
        started: Instant,
        artifacts: Vec<PathBuf>,
        detail: Option<String>,
    ) -> Result<()> {
        self.manifest.fingerprints.insert(name.to_string(), fingerprint);
        self.manifest.record_stage(StageRecord {
            name: name.to_string(),
            status,
            wall_ms: started.elapsed().as_millis() as u64,
            artifacts,
            detail,
        });
        self.manifest.save(&self.run_dir)
    }

    // ----- prepare-data ---------------------------------------------------

    /// Loads, optionally merges and preprocesses, and fingerprints the data.
    /// Always executes (later stages need the splits in memory); the status
    /// records whether anything upstream of it changed.
    pub fn stage_prepare(&mut self) -> Result<()> {
        const STAGE: &str = "prepare_data";
        let started = Instant::now();

        let mut parts = vec![
            file_sha(&self.cfg.data.train)?,
            file_sha(&self.cfg.data.validation)?,
            file_sha(&self.cfg.data.test)?,
        ];
        if let Some(external) = &self.cfg.data.external {
            parts.push(file_sha(external)?);
        }
        parts.push(json_of(&self.cfg.preprocess));
        parts.push(format!("{:?}", self.cfg.data.format));
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        let fingerprint = combine(&refs);
        let cached = self.can_skip(STAGE, &fingerprint, &[]);

        let hint = self.cfg.format_hint()?;
        let train = load_split(&self.cfg.data.train, hint, SplitName::Train)?;
        let validation = load_split(&self.cfg.data.validation, hint, SplitName::Validation)?;
        let test = load_split(&self.cfg.data.test, hint, SplitName::Test)?;

        let mut block = DataBlock {
            train: compute_stats(&train),
            validation: compute_stats(&validation),
            test: compute_stats(&test),
            external: None,
            merged_train: None,
        };

        let mut detail = None;
        let mut train = train;
        if let Some(external_path) = &self.cfg.data.external {
            let outcome = adapt_fakecovid(external_path, &FakeCovidOptions::default())?;
            block.external = Some(compute_stats(&outcome.split));
            let merged = merge_splits(&train, &outcome.split, "fc")?;
            let note = format!(
                "merged training set: {} posts ({} original + {} external, {} skipped for empty titles)",
                merged.len(),
                train.len(),
                outcome.split.len(),
                outcome.skipped_empty_title
            );
            println!("{note}");
            detail = Some(note);
            block.merged_train = Some(compute_stats(&merged));
            train = merged;
        }

        let (train, validation, test) = if self.cfg.preprocess.any_enabled() {
            let opts = self.cfg.preprocess;
            (
                train.map_text(|t| preprocess_text(t, &opts))?,
                validation.map_text(|t| preprocess_text(t, &opts))?,
                test.map_text(|t| preprocess_text(t, &opts))?,
            )
        } else {
            (train, validation, test)
        };

        self.manifest.data = Some(block);
        self.data = Some(PreparedData {
            train,
            validation,
            test,
            fingerprint: fingerprint.clone(),
        });

        let status = if cached { StageStatus::Cached } else { StageStatus::Done };
        self.finish_stage(STAGE, fingerprint, status, started, Vec::new(), detail)
    }

    // ----- train-base -----------------------------------------------------

    fn member_stage(name: &str) -> String {
        format!("train_base:{name}")
    }

    fn checkpoint_rel(name: &str) -> PathBuf {
        PathBuf::from("checkpoints").join(name)
    }

    fn member_fingerprint(&self, name: &str, index: usize) -> Result<String> {
        let backbone = self.cfg.backbone_id(name)?;
        Ok(combine(&[
            &self.data()?.fingerprint,
            &backbone.to_string(),
            &json_of(&self.cfg.head),
            &json_of(&self.cfg.train_config_for(name, index)),
        ]))
    }

    /// Fine-tunes one member and writes its checkpoint, or reuses the
    /// existing checkpoint when inputs are unchanged.
    pub fn stage_train_member(&mut self, name: &str, index: usize) -> Result<()> {
        let stage = Self::member_stage(name);
        let started = Instant::now();
        let fingerprint = self.member_fingerprint(name, index)?;
        let rel = Self::checkpoint_rel(name);
        let indicator = rel.join("manifest.json");

        if self.can_skip(&stage, &fingerprint, std::slice::from_ref(&indicator)) {
            let (model, _) = TrainedBaseModel::load(&self.run_dir.join(&rel))?;
            self.manifest.record_member(MemberRecord {
                name: name.to_string(),
                fingerprint: model.fingerprint(),
                checkpoint: rel,
            });
            return self.finish_stage(
                &stage,
                fingerprint,
                StageStatus::Cached,
                started,
                vec![indicator],
                None,
            );
        }

        let provider = self.provider()?;
        let train_cfg = self.cfg.train_config_for(name, index);
        let outcome = self.train_member_body(&provider, name, &train_cfg)?;
        let (model, history) = outcome;
        let echo = serde_json::json!({
            "input_fingerprint": fingerprint,
            "train": train_cfg,
            "head": self.cfg.head,
        });
        model.save(&self.run_dir.join(&rel), Some(echo))?;
        self.manifest.record_member(MemberRecord {
            name: name.to_string(),
            fingerprint: model.fingerprint(),
            checkpoint: rel,
        });
        let detail = history
            .best_epoch
            .map(|e| format!("best epoch {e} of {}", history.epochs.len()));
        self.finish_stage(
            &stage,
            fingerprint,
            StageStatus::Done,
            started,
            vec![indicator],
            detail,
        )
    }

    fn train_member_body(
        &self,
        provider: &FsProvider,
        name: &str,
        train_cfg: &TrainConfig,
    ) -> Result<(TrainedBaseModel, fakestack_backbones::FineTuneHistory)> {
        let backbone = self.cfg.backbone_id(name)?;
        let data = self.data()?;
        fine_tune(
            provider,
            &backbone,
            &self.cfg.head,
            &data.train,
            &data.validation,
            train_cfg,
        )
        .map_err(Into::into)
    }

    /// Runs `stage_train_member` for every configured member, honoring
    /// `max_parallel_members`.
    pub fn stage_train_all_members(&mut self) -> Result<()> {
        let members = self.cfg.member_names()?;
        if self.cfg.max_parallel_members <= 1 {
            for (index, name) in members.iter().enumerate() {
                self.stage_train_member(name, index)?;
            }
            return Ok(());
        }

        // Parallel path: decide skips up front, then train the remainder in
        // bounded batches. Each member is an independent pure function of
        // (config, data, seed), so batching changes wall time only.
        let mut pending = Vec::new();
        for (index, name) in members.iter().enumerate() {
            let stage = Self::member_stage(name);
            let fingerprint = self.member_fingerprint(name, index)?;
            let indicator = Self::checkpoint_rel(name).join("manifest.json");
            if self.can_skip(&stage, &fingerprint, std::slice::from_ref(&indicator)) {
                self.stage_train_member(name, index)?;
            } else {
                pending.push((index, name.clone()));
            }
        }
        let provider = self.provider()?;
        for batch in pending.chunks(self.cfg.max_parallel_members) {
            let results: Vec<(usize, String, Result<_>)> = std::thread::scope(|scope| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|(index, name)| {
                        let provider = &provider;
                        let this = &*self;
                        let train_cfg = this.cfg.train_config_for(name, *index);
                        scope.spawn(move || {
                            let started = Instant::now();
                            let out = this.train_member_body(provider, name, &train_cfg);
                            (*index, name.clone(), started, out)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        let (index, name, started, out) = h.join().expect("member thread");
                        (index, name, out.map(|m| (m, started)))
                    })
                    .collect()
            });
            for (index, name, result) in results {
                let stage = Self::member_stage(&name);
                let fingerprint = self.member_fingerprint(&name, index)?;
                let rel = Self::checkpoint_rel(&name);
                let indicator = rel.join("manifest.json");
                let ((model, history), started) = result?;
                let train_cfg = self.cfg.train_config_for(&name, index);
                let echo = serde_json::json!({
                    "input_fingerprint": fingerprint,
                    "train": train_cfg,
                    "head": self.cfg.head,
                });
                model.save(&self.run_dir.join(&rel), Some(echo))?;
                self.manifest.record_member(MemberRecord {
                    name: name.clone(),
                    fingerprint: model.fingerprint(),
                    checkpoint: rel,
                });
                let detail = history
                    .best_epoch
                    .map(|e| format!("best epoch {e} of {}", history.epochs.len()));
                self.finish_stage(
                    &stage,
                    fingerprint,
                    StageStatus::Done,
                    started,
                    vec![indicator],
                    detail,
                )?;
            }
        }
        Ok(())
    }

    // ----- predict ----------------------------------------------------------

    fn prediction_rel(model_file: &str, split: SplitKey) -> PathBuf {
        PathBuf::from("predictions").join(format!("{model_file}_{}.csv", split.as_str()))
    }

    /// Predicts one split with one member's checkpoint and caches the CSV.
    pub fn stage_predict(&mut self, name: &str, split: SplitKey) -> Result<()> {
        let stage = format!("predict:{name}:{}", split.as_str());
        let started = Instant::now();
        let member = self.manifest.member(name).cloned().ok_or_else(|| {
            CliError::Config(format!(
                "member {name:?} has no checkpoint in this run; run train-base first"
            ))
        })?;
        let fingerprint = combine(&[
            &member.fingerprint,
            &self.data()?.fingerprint,
            split.as_str(),
        ]);
        let rel = Self::prediction_rel(name, split);
        if self.can_skip(&stage, &fingerprint, std::slice::from_ref(&rel)) {
            return self.finish_stage(
                &stage,
                fingerprint,
                StageStatus::Cached,
                started,
                vec![rel],
                None,
            );
        }

        let (model, _) = TrainedBaseModel::load(&self.run_dir.join(&member.checkpoint))?;
        let records = model.predict_batch(self.split(split)?.posts())?;
        cache_predictions(&records, &self.run_dir.join(&rel))?;
        self.finish_stage(&stage, fingerprint, StageStatus::Done, started, vec![rel], None)
    }

    /// The splits member predictions are needed for under the configured
    /// meta source.
    fn prediction_splits(&self) -> Result<Vec<SplitKey>> {
        Ok(match self.cfg.meta_source()? {
            MetaSource::Paper => vec![SplitKey::Train, SplitKey::Validation, SplitKey::Test],
            MetaSource::Val | MetaSource::Oof => vec![SplitKey::Validation, SplitKey::Test],
        })
    }

    // ----- build-meta ---------------------------------------------------------

    const META_FEATURES_REL: &'static str = "meta/meta_features.csv";
    const FOLDS_REL: &'static str = "meta/folds.json";
    const META_LEARNER_REL: &'static str = "meta/learner";

    /// Loads the cached prediction file for one (member, split).
    fn member_records(&self, name: &str, split: SplitKey) -> Result<Vec<PredictionRecord>> {
        let rel = Self::prediction_rel(name, split);
        let path = self.run_dir.join(&rel);
        if !path.is_file() {
            return Err(CliError::Config(format!(
                "prediction cache {} is missing; run predict --member {name} --split {} first",
                rel.display(),
                split.as_str()
            )));
        }
        load_predictions(&path)
    }

    fn build_meta_fingerprint(&self, members: &[String]) -> Result<String> {
        let mut parts: Vec<String> = Vec::new();
        parts.push(self.data()?.fingerprint.clone());
        parts.push(self.cfg.meta.source.clone());
        parts.push(self.cfg.meta.k.to_string());
        parts.push(self.cfg.seed.to_string());
        for name in members {
            match self.manifest.member(name) {
                Some(m) => parts.push(m.fingerprint.clone()),
                // OOF trains its own fold models; identify them by config.
                None => parts.push(json_of(&self.cfg.train_config_for(name, 0))),
            }
        }
        parts.push(json_of(&self.cfg.head));
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        Ok(combine(&refs))
    }

    /// Assembles the meta-training matrix from the configured source and
    /// writes it (plus fold bookkeeping for `oof`) under `meta/`.
    pub fn stage_build_meta(&mut self) -> Result<()> {
        const STAGE: &str = "build_meta";
        let started = Instant::now();
        let members = self.cfg.member_names()?;
        let source = self.cfg.meta_source()?;
        let fingerprint = self.build_meta_fingerprint(&members)?;

        let mut artifacts = vec![PathBuf::from(Self::META_FEATURES_REL)];
        if source == MetaSource::Oof {
            artifacts.push(PathBuf::from(Self::FOLDS_REL));
        }
        if self.can_skip(STAGE, &fingerprint, &artifacts) {
            return self.finish_stage(
                STAGE,
                fingerprint,
                StageStatus::Cached,
                started,
                artifacts,
                None,
            );
        }

        let features_path = self.run_dir.join(Self::META_FEATURES_REL);
        fs::create_dir_all(self.run_dir.join("meta"))?;
        let mut detail = None;
        match source {
            MetaSource::Paper | MetaSource::Val => {
                let split = if source == MetaSource::Paper {
                    SplitKey::Train
                } else {
                    SplitKey::Validation
                };
                let mut records_by_model = BTreeMap::new();
                for name in &members {
                    records_by_model.insert(name.clone(), self.member_records(name, split)?);
                }
                let matrix =
                    build_meta_features(&records_by_model, &members, Some(self.split(split)?))?;
                matrix.save_csv(&features_path)?;
            }
            MetaSource::Oof => {
                let provider = self.provider()?;
                let specs: Vec<MemberSpec> = members
                    .iter()
                    .enumerate()
                    .map(|(index, name)| {
                        Ok(MemberSpec {
                            backbone: self.cfg.backbone_id(name)?,
                            head: self.cfg.head.clone(),
                            train: self.cfg.train_config_for(name, index),
                        })
                    })
                    .collect::<Result<_>>()?;
                let data = self.data()?;
                let oof = generate_oof_predictions(
                    &provider,
                    &specs,
                    &data.train,
                    self.cfg.meta.k,
                    self.cfg.seed,
                )?;
                let matrix =
                    build_meta_features(&oof.records_by_model, &members, Some(&data.train))?;
                matrix.save_csv(&features_path)?;
                let folds = serde_json::json!({
                    "k": oof.k,
                    "fold_of_post": oof.fold_of_post,
                });
                fs::write(
                    self.run_dir.join(Self::FOLDS_REL),
                    serde_json::to_string_pretty(&folds)?,
                )?;
                detail = Some(format!("{} folds over {} posts", oof.k, oof.fold_of_post.len()));
            }
        }

        self.finish_stage(STAGE, fingerprint, StageStatus::Done, started, artifacts, detail)
    }

    // ----- train-meta -----------------------------------------------------------

    /// Trains the meta-learner from the written matrix and checkpoints it.
    pub fn stage_train_meta(&mut self) -> Result<()> {
        const STAGE: &str = "train_meta";
        let started = Instant::now();
        let features_path = self.run_dir.join(Self::META_FEATURES_REL);
        if !features_path.is_file() {
            return Err(CliError::Config(format!(
                "meta features {} are missing; run build-meta first",
                Self::META_FEATURES_REL
            )));
        }
        let fingerprint = combine(&[
            &file_sha(&features_path)?,
            &self.cfg.meta.kind,
            &self.cfg.seed.to_string(),
        ]);
        let indicator = PathBuf::from(Self::META_LEARNER_REL).join("meta.json");
        self.manifest.meta_fingerprint = Some(fingerprint.clone());
        if self.can_skip(STAGE, &fingerprint, std::slice::from_ref(&indicator)) {
            return self.finish_stage(
                STAGE,
                fingerprint,
                StageStatus::Cached,
                started,
                vec![indicator],
                None,
            );
        }

        let matrix = MetaFeatureMatrix::load_csv(&features_path)?;
        let meta_cfg = MetaConfig::for_kind(self.cfg.meta_kind()?, self.cfg.seed);
        let (learner, _) = train_meta(&matrix, &meta_cfg)?;
        learner.save(&self.run_dir.join(Self::META_LEARNER_REL))?;
        self.finish_stage(
            STAGE,
            fingerprint,
            StageStatus::Done,
            started,
            vec![indicator],
            None,
        )
    }

    // ----- evaluate --------------------------------------------------------------

    fn ensemble_file_stem(&self) -> Result<String> {
        Ok(self.cfg.variant()?.model_name().replace(':', "-"))
    }

    fn report_rel(model_file: &str, split: SplitKey, ext: &str) -> PathBuf {
        PathBuf::from("reports").join(format!("{model_file}_{}.{ext}", split.as_str()))
    }

    /// Evaluates every member and the ensemble on validation and test,
    /// writing one markdown and one json report per (model, split) plus a
    /// cross-model summary.
    pub fn stage_evaluate(&mut self) -> Result<()> {
        const STAGE: &str = "evaluate";
        let started = Instant::now();
        let members = self.cfg.member_names()?;
        let variant = self.cfg.variant()?;
        let ensemble_stem = self.ensemble_file_stem()?;

        let mut parts: Vec<String> = vec![self.data()?.fingerprint.clone()];
        for name in &members {
            for split in [SplitKey::Validation, SplitKey::Test] {
                let rel = Self::prediction_rel(name, split);
                parts.push(file_sha(&self.run_dir.join(rel)).map_err(|_| {
                    CliError::Config(format!(
                        "prediction cache for {name} on {} is missing; run predict first",
                        split.as_str()
                    ))
                })?);
            }
        }
        parts.push(self.manifest.meta_fingerprint.clone().unwrap_or_default());
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        let fingerprint = combine(&refs);

        let mut artifacts = Vec::new();
        for split in [SplitKey::Validation, SplitKey::Test] {
            artifacts.push(Self::prediction_rel(&ensemble_stem, split));
            for stem in members.iter().map(String::as_str).chain([ensemble_stem.as_str()]) {
                artifacts.push(Self::report_rel(stem, split, "md"));
                artifacts.push(Self::report_rel(stem, split, "json"));
            }
        }
        artifacts.push(PathBuf::from("reports/summary.md"));

        if self.can_skip(STAGE, &fingerprint, &artifacts) {
            return self.finish_stage(
                STAGE,
                fingerprint,
                StageStatus::Cached,
                started,
                artifacts,
                None,
            );
        }

        let learner_dir = self.run_dir.join(Self::META_LEARNER_REL);
        if !learner_dir.join("meta.json").is_file() {
            return Err(CliError::Config(
                "meta-learner checkpoint is missing; run train-meta first".into(),
            ));
        }
        let learner = MetaLearner::load(&learner_dir)?;

        fs::create_dir_all(self.run_dir.join("reports"))?;
        let mut summary: Vec<(String, BTreeMap<&'static str, f64>)> = Vec::new();

        for split in [SplitKey::Validation, SplitKey::Test] {
            let gold = self.split(split)?.clone();
            let mut records_by_model = BTreeMap::new();
            for name in &members {
                records_by_model.insert(name.clone(), self.member_records(name, split)?);
            }

            // The ensemble consumes the identical cached member numbers and
            // its own predictions round-trip through the same cache format.
            let matrix = build_meta_features(&records_by_model, &members, None)?;
            let fresh = learner.predict_matrix(&matrix, &variant.model_name())?;
            let ens_rel = Self::prediction_rel(&ensemble_stem, split);
            cache_predictions(&fresh, &self.run_dir.join(&ens_rel))?;
            let ensemble_records = load_predictions(&self.run_dir.join(&ens_rel))?;

            let mut entries: Vec<(&str, Vec<PredictionRecord>)> = Vec::new();
            for name in &members {
                entries.push((name.as_str(), records_by_model[name].clone()));
            }
            entries.push((ensemble_stem.as_str(), ensemble_records));

            for (stem, records) in entries {
                let report = evaluate(&records, &gold)?;
                self.write_report(stem, split, &report)?;
                let bucket = summary
                    .iter_mut()
                    .find(|(model, _)| model == stem)
                    .map(|(_, b)| b);
                let bucket = match bucket {
                    Some(b) => b,
                    None => {
                        summary.push((stem.to_string(), BTreeMap::new()));
                        &mut summary.last_mut().expect("just pushed").1
                    }
                };
                bucket.insert(split.as_str(), report.accuracy);
            }
        }

        let mut table = String::from(
            "# Run summary\n\n| Model | Validation accuracy | Test accuracy |\n|---|---|---|\n",
        );
        for (model, buckets) in &summary {
            let fmt = |k: &str| {
                buckets
                    .get(k)
                    .map(|v| format!("{v:.9}"))
                    .unwrap_or_else(|| "-".to_string())
            };
            table.push_str(&format!(
                "| {model} | {} | {} |\n",
                fmt("validation"),
                fmt("test")
            ));
        }
        fs::write(self.run_dir.join("reports/summary.md"), table)?;

        self.finish_stage(STAGE, fingerprint, StageStatus::Done, started, artifacts, None)
    }

    fn write_report(&self, stem: &str, split: SplitKey, report: &EvaluationReport) -> Result<()> {
        let md = render_report(report, ReportFormat::Markdown);
        let json = render_report(report, ReportFormat::Json);
        fs::write(self.run_dir.join(Self::report_rel(stem, split, "md")), md)?;
        fs::write(self.run_dir.join(Self::report_rel(stem, split, "json")), json)?;
        Ok(())
    }

    // ----- whole-experiment driver ---------------------------------------------

    /// Every stage name `run_all` will visit for this config, in order.
    fn plan(&self) -> Result<Vec<String>> {
        let members = self.cfg.member_names()?;
        let mut plan = vec!["prepare_data".to_string()];
        for name in &members {
            plan.push(Self::member_stage(name));
        }
        for name in &members {
            for split in self.prediction_splits()? {
                plan.push(format!("predict:{name}:{}", split.as_str()));
            }
        }
        plan.extend([
            "build_meta".to_string(),
            "train_meta".to_string(),
            "evaluate".to_string(),
        ]);
        Ok(plan)
    }

    /// Runs the full pipeline. On a stage failure the manifest records the
    /// diagnostics, marks every dependent stage blocked, and the error is
    /// returned after the manifest is saved.
    pub fn run_all(&mut self) -> Result<()> {
        let members = self.cfg.member_names()?;
        let plan = self.plan()?;
        let mut completed = 0usize;

        let mut step = |p: &mut Self, name: &str| -> Result<()> {
            match name {
                "prepare_data" => p.stage_prepare(),
                "build_meta" => p.stage_build_meta(),
                "train_meta" => p.stage_train_meta(),
                "evaluate" => p.stage_evaluate(),
                other => {
                    if let Some(member) = other.strip_prefix("train_base:") {
                        let index = members
                            .iter()
                            .position(|m| m == member)
                            .expect("planned member");
                        p.stage_train_member(member, index)
                    } else if let Some(rest) = other.strip_prefix("predict:") {
                        let (member, split) = rest.rsplit_once(':').expect("planned predict");
                        p.stage_predict(member, SplitKey::parse(split)?)
                    } else {
                        Err(CliError::Internal(format!("unknown planned stage {other}")))
                    }
                }
            }
        };

        for name in &plan {
            // Member training honors the parallelism knob via the grouped
            // runner; individual train stages are then already recorded.
            if name.starts_with("train_base:") && self.cfg.max_parallel_members > 1 {
                if plan.iter().position(|s| s == name)
                    == plan.iter().position(|s| s.starts_with("train_base:"))
                {
                    if let Err(e) = self.stage_train_all_members() {
                        return self.fail(&plan, completed, name, e);
                    }
                }
                completed += 1;
                continue;
            }
            match step(self, name) {
                Ok(()) => completed += 1,
                Err(e) => return self.fail(&plan, completed, name, e),
            }
        }
        Ok(())
    }

    /// Records the failed stage and blocks everything after it.
    fn fail(
        &mut self,
        plan: &[String],
        completed: usize,
        failed_stage: &str,
        error: CliError,
    ) -> Result<()> {
        self.manifest.record_stage(StageRecord {
            name: failed_stage.to_string(),
            status: StageStatus::Failed,
            wall_ms: 0,
            artifacts: Vec::new(),
            detail: Some(error.to_string()),
        });
        self.manifest.fingerprints.remove(failed_stage);
        for name in plan.iter().skip(completed + 1) {
            self.manifest.record_stage(StageRecord {
                name: name.clone(),
                status: StageStatus::Blocked,
                wall_ms: 0,
                artifacts: Vec::new(),
                detail: None,
            });
        }
        self.manifest.save(&self.run_dir)?;
        Err(error)
    }
}

/// Executes the full experiment for a validated config, returning the final
/// manifest. The manifest is also persisted under the run directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let mut pipeline = Pipeline::new(cfg.clone())?;
    pipeline.run_all()?;
    Ok(pipeline.into_manifest())
}
