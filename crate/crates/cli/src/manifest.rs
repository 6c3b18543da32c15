//! The per-run manifest: stage ledger, artifact index, fingerprints, and the
//! fully-resolved config echo. It doubles as the resumability store — a
//! stage is skipped when its recorded input fingerprint matches and all of
//! its artifacts still exist.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fakestack_data::SplitStats;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    /// Ran to completion in this invocation.
    Done,
    /// Outputs were reused; inputs had not changed.
    Cached,
    /// Ran and failed; `detail` carries the diagnostics.
    Failed,
    /// Not attempted because an upstream stage failed.
    Blocked,
}

impl StageStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            StageStatus::Done => "done",
            StageStatus::Cached => "cached",
            StageStatus::Failed => "failed",
            StageStatus::Blocked => "blocked",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub wall_ms: u64,
    /// Artifact paths relative to the run directory.
    pub artifacts: Vec<PathBuf>,
    /// Diagnostics on failure; informational notes otherwise.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub name: String,
    /// Content hash of the trained model.
    pub fingerprint: String,
    /// Checkpoint directory relative to the run directory.
    pub checkpoint: PathBuf,
}

/// Split statistics captured by the data stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBlock {
    pub train: SplitStats,
    pub validation: SplitStats,
    pub test: SplitStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external: Option<SplitStats>,
    /// Present when an external split was merged into training.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merged_train: Option<SplitStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    /// Version of the binary that produced the run.
    pub app_version: String,
    pub run_id: String,
    /// The fully-defaulted configuration the run executed with.
    pub config: ExperimentConfig,
    pub stages: Vec<StageRecord>,
    /// Input fingerprint per stage, for resume decisions.
    pub fingerprints: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataBlock>,
    pub members: Vec<MemberRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta_fingerprint: Option<String>,
}

impl RunManifest {
    pub fn new(run_id: String, config: ExperimentConfig) -> Self {
        Self {
            format_version: 1,
            app_version: env!("CARGO_PKG_VERSION").to_string(),
            run_id,
            config,
            stages: Vec::new(),
            fingerprints: BTreeMap::new(),
            data: None,
            members: Vec::new(),
            meta_fingerprint: None,
        }
    }

    /// Inserts or replaces the record with the same stage name.
    pub fn record_stage(&mut self, record: StageRecord) {
        match self.stages.iter_mut().find(|s| s.name == record.name) {
            Some(existing) => *existing = record,
            None => self.stages.push(record),
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Inserts or replaces a member entry, keeping member order.
    pub fn record_member(&mut self, record: MemberRecord) {
        match self.members.iter_mut().find(|m| m.name == record.name) {
            Some(existing) => *existing = record,
            None => self.members.push(record),
        }
    }

    pub fn member(&self, name: &str) -> Option<&MemberRecord> {
        self.members.iter().find(|m| m.name == name)
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        fs::create_dir_all(run_dir)?;
        let text = serde_json::to_string_pretty(self)?;
        fs::write(run_dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if manifest.format_version != 1 {
            return Err(CliError::Data(format!(
                "{}: unsupported manifest format_version {}",
                path.display(),
                manifest.format_version
            )));
        }
        Ok(manifest)
    }
}
