//! Prediction cache files: one CSV per (model, split) with probabilities at
//! nine decimal digits. The pipeline always round-trips fresh predictions
//! through this format before using them, so cached and freshly-computed
//! numbers are bit-identical downstream.

use std::path::Path;

use fakestack_data::Label;
use fakestack_nn::{ClassProbabilities, PredictionRecord};

use crate::error::CliError;
use crate::Result;

const HEADER: [&str; 5] = ["post_id", "model", "p_fake", "p_real", "predicted"];

/// Writes records as CSV. An empty list produces a header-only file.
pub fn cache_predictions(records: &[PredictionRecord], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(HEADER)?;
    for r in records {
        writer.write_record([
            r.post_id.as_str(),
            r.model_name.as_str(),
            &format!("{:.9}", r.probs.p_fake),
            &format!("{:.9}", r.probs.p_real),
            r.predicted.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a cache file back, validating probabilities row by row. Parse and
/// invariant failures report the offending line number.
pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;

    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(CliError::Data(format!(
            "{}: unexpected header {:?} (expected {:?})",
            path.display(),
            header.iter().collect::<Vec<_>>(),
            HEADER
        )));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| "?".to_string());
        let at = |i: usize| row.get(i).unwrap_or("");
        let parse_prob = |i: usize| -> Result<f64> {
            at(i).parse::<f64>().map_err(|e| {
                CliError::Data(format!(
                    "{} line {line}: bad {} value {:?}: {e}",
                    path.display(),
                    HEADER[i],
                    at(i)
                ))
            })
        };
        let probs = ClassProbabilities::new(parse_prob(2)?, parse_prob(3)?).map_err(|e| {
            CliError::Data(format!("{} line {line}: {e}", path.display()))
        })?;
        let predicted = Label::parse(at(4)).ok_or_else(|| {
            CliError::Data(format!(
                "{} line {line}: bad predicted label {:?}",
                path.display(),
                at(4)
            ))
        })?;
        // Nine-decimal rounding cannot flip a strict argmax, so any real
        // disagreement means the file was edited.
        if predicted != probs.predicted() && (probs.p_fake - probs.p_real).abs() > 2e-9 {
            return Err(CliError::Data(format!(
                "{} line {line}: predicted label {} disagrees with probabilities",
                path.display(),
                predicted.as_str()
            )));
        }
        records.push(PredictionRecord {
            post_id: at(0).to_string(),
            model_name: at(1).to_string(),
            probs,
            predicted,
        });
    }
    Ok(records)
}
