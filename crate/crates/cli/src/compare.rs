//! Side-by-side comparison of two finished runs, e.g. the same config with
//! and without the external data merged in. Differences are reported, not
//! judged.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use fakestack_metrics::EvaluationReport;

use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::Result;

/// (model, split) → report, read back from `reports/*.json`.
fn collect_reports(run_dir: &Path) -> Result<BTreeMap<(String, String), EvaluationReport>> {
    let reports_dir = run_dir.join("reports");
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(&reports_dir).map_err(|e| {
        CliError::Data(format!(
            "cannot read {} (is this a finished run?): {e}",
            reports_dir.display()
        ))
    })?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s,
            None => continue,
        };
        // File names are <model>_<split>.json; the model part may itself
        // contain underscores, so split at the last one.
        let (model, split) = match stem.rsplit_once('_') {
            Some(pair) => pair,
            None => continue,
        };
        let report: EvaluationReport = serde_json::from_str(&fs::read_to_string(&path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        out.insert((model.to_string(), split.to_string()), report);
    }
    Ok(out)
}

fn split_rank(split: &str) -> usize {
    match split {
        "train" => 0,
        "validation" => 1,
        "test" => 2,
        _ => 3,
    }
}

fn fmt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.9}")).unwrap_or_else(|| "-".into())
}

fn fmt_delta(a: Option<f64>, b: Option<f64>) -> String {
    match (a, b) {
        (Some(a), Some(b)) => format!("{:+.9}", b - a),
        _ => "-".into(),
    }
}

/// Renders a markdown comparison of two run directories: configuration
/// highlights from the manifests, then accuracy and weighted f1 per
/// (model, split) with signed B−A deltas.
pub fn compare_runs(run_a: &Path, run_b: &Path) -> Result<String> {
    let manifest_a = RunManifest::load(run_a)?;
    let manifest_b = RunManifest::load(run_b)?;
    let reports_a = collect_reports(run_a)?;
    let reports_b = collect_reports(run_b)?;

    let mut out = String::from("# Run comparison\n\n");
    out.push_str("| | A | B |\n|---|---|---|\n");
    let config_row = |label: &str, a: String, b: String| format!("| {label} | {a} | {b} |\n");
    out.push_str(&config_row(
        "run id",
        manifest_a.run_id.clone(),
        manifest_b.run_id.clone(),
    ));
    out.push_str(&config_row(
        "directory",
        run_a.display().to_string(),
        run_b.display().to_string(),
    ));
    out.push_str(&config_row(
        "seed",
        manifest_a.config.seed.to_string(),
        manifest_b.config.seed.to_string(),
    ));
    out.push_str(&config_row(
        "size class",
        manifest_a.config.size_class.clone(),
        manifest_b.config.size_class.clone(),
    ));
    let members = |m: &RunManifest| {
        m.config
            .member_names()
            .map(|names| names.join(", "))
            .unwrap_or_else(|_| "?".into())
    };
    out.push_str(&config_row("members", members(&manifest_a), members(&manifest_b)));
    out.push_str(&config_row(
        "meta",
        format!(
            "{} ({}, k={})",
            manifest_a.config.meta.kind, manifest_a.config.meta.source, manifest_a.config.meta.k
        ),
        format!(
            "{} ({}, k={})",
            manifest_b.config.meta.kind, manifest_b.config.meta.source, manifest_b.config.meta.k
        ),
    ));
    let external = |m: &RunManifest| {
        m.config
            .data
            .external
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "none".into())
    };
    out.push_str(&config_row("external data", external(&manifest_a), external(&manifest_b)));

    let mut keys: BTreeSet<(String, String)> = BTreeSet::new();
    keys.extend(reports_a.keys().cloned());
    keys.extend(reports_b.keys().cloned());
    let mut keys: Vec<_> = keys.into_iter().collect();
    keys.sort_by(|(ma, sa), (mb, sb)| ma.cmp(mb).then(split_rank(sa).cmp(&split_rank(sb))));

    out.push_str(
        "\n| Model | Split | Accuracy A | Accuracy B | Δ accuracy | Weighted f1 A | Weighted f1 B | Δ f1 |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for (model, split) in keys {
        let a = reports_a.get(&(model.clone(), split.clone()));
        let b = reports_b.get(&(model.clone(), split.clone()));
        let acc_a = a.map(|r| r.accuracy);
        let acc_b = b.map(|r| r.accuracy);
        let f1_a = a.map(|r| r.weighted.f1);
        let f1_b = b.map(|r| r.weighted.f1);
        out.push_str(&format!(
            "| {model} | {split} | {} | {} | {} | {} | {} | {} |\n",
            fmt(acc_a),
            fmt(acc_b),
            fmt_delta(acc_a, acc_b),
            fmt(f1_a),
            fmt(f1_b),
            fmt_delta(f1_a, f1_b),
        ));
    }
    Ok(out)
}
