use fakestack_data::{DatasetSplit, Label};
use fakestack_nn::PredictionRecord;
use serde::{Deserialize, Serialize};

use crate::confusion::{confusion, ConfusionMatrix};
use crate::{MetricsError, Result};

/// Precision/recall/F1 of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class metrics plus the names of any zero-denominator conventions
/// that fired (e.g. `"precision_fake"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassMetrics {
    pub fake: ClassMetrics,
    pub real: ClassMetrics,
    pub zero_denominator_flags: Vec<String>,
}

impl PerClassMetrics {
    pub fn of(&self, class: Label) -> &ClassMetrics {
        match class {
            Label::Fake => &self.fake,
            Label::Real => &self.real,
        }
    }
}

/// Support-weighted aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Complete evaluation of one prediction set against one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub accuracy: f64,
    pub per_class: PerClassMetrics,
    pub weighted: WeightedMetrics,
    pub support_fake: usize,
    pub support_real: usize,
}

/// Output format for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
}

/// Ratio with the zero-denominator convention: 0, plus a named flag.
fn ratio(num: f64, den: f64, flag: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        flags.push(flag.to_string());
        0.0
    } else {
        num / den
    }
}

/// Per-class precision, recall, and F1 from the confusion counts.
/// A zero denominator yields 0 and sets a diagnostic flag.
pub fn per_class(cm: &ConfusionMatrix) -> PerClassMetrics {
    let mut flags = Vec::new();
    let mut metrics = |class: Label| {
        let other = match class {
            Label::Fake => Label::Real,
            Label::Real => Label::Fake,
        };
        let tp = cm.count(class, class) as f64;
        let fp = cm.count(other, class) as f64;
        let fn_ = cm.count(class, other) as f64;
        let suffix = class.as_str();
        let precision = ratio(tp, tp + fp, &format!("precision_{suffix}"), &mut flags);
        let recall = ratio(tp, tp + fn_, &format!("recall_{suffix}"), &mut flags);
        let f1 = ratio(
            2.0 * precision * recall,
            precision + recall,
            &format!("f1_{suffix}"),
            &mut flags,
        );
        ClassMetrics {
            precision,
            recall,
            f1,
        }
    };
    let fake = metrics(Label::Fake);
    let real = metrics(Label::Real);
    PerClassMetrics {
        fake,
        real,
        zero_denominator_flags: flags,
    }
}

/// Accuracy and support-weighted precision/recall/F1.
pub fn weighted(cm: &ConfusionMatrix) -> Result<WeightedMetrics> {
    let n = cm.total();
    if n == 0 {
        return Err(MetricsError::Argument(
            "cannot aggregate an empty confusion matrix".into(),
        ));
    }
    let pc = per_class(cm);
    let n = n as f64;
    let (wf, wr) = (cm.support(Label::Fake) as f64, cm.support(Label::Real) as f64);
    let avg = |getter: fn(&ClassMetrics) -> f64| -> f64 {
        (wf * getter(&pc.fake) + wr * getter(&pc.real)) / n
    };
    Ok(WeightedMetrics {
        accuracy: cm.correct() as f64 / n,
        precision: avg(|m| m.precision),
        recall: avg(|m| m.recall),
        f1: avg(|m| m.f1),
    })
}

/// Assembles the full report from a confusion matrix.
pub fn report_from_confusion(cm: &ConfusionMatrix) -> Result<EvaluationReport> {
    let w = weighted(cm)?;
    Ok(EvaluationReport {
        n: cm.total(),
        accuracy: w.accuracy,
        per_class: per_class(cm),
        weighted: w,
        support_fake: cm.support(Label::Fake),
        support_real: cm.support(Label::Real),
    })
}

/// One-call evaluation: tally and aggregate.
pub fn evaluate(preds: &[PredictionRecord], golds: &DatasetSplit) -> Result<EvaluationReport> {
    report_from_confusion(&confusion(preds, golds)?)
}

fn round9(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Renders a report. Markdown mirrors the published table layout
/// (Accuracy | f1 Fake | f1 Real | Precision Fake | Precision Real |
/// Recall Fake | Recall Real) at 3 decimals; JSON carries every metric at
/// 9 decimals and parses back to exactly the rendered values.
pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => {
            let pc = &report.per_class;
            let mut out = String::new();
            out.push_str(
                "| Accuracy | f1 Fake | f1 Real | Precision Fake | Precision Real | Recall Fake | Recall Real |\n",
            );
            out.push_str("| --- | --- | --- | --- | --- | --- | --- |\n");
            out.push_str(&format!(
                "| {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} |\n",
                report.accuracy,
                pc.fake.f1,
                pc.real.f1,
                pc.fake.precision,
                pc.real.precision,
                pc.fake.recall,
                pc.real.recall,
            ));
            if !pc.zero_denominator_flags.is_empty() {
                out.push_str(&format!(
                    "\nZero-denominator conventions applied: {}\n",
                    pc.zero_denominator_flags.join(", ")
                ));
            }
            out
        }
        ReportFormat::Json => {
            let value = serde_json::json!({
                "n": report.n,
                "accuracy": round9(report.accuracy),
                "per_class": {
                    "fake": {
                        "precision": round9(report.per_class.fake.precision),
                        "recall": round9(report.per_class.fake.recall),
                        "f1": round9(report.per_class.fake.f1),
                    },
                    "real": {
                        "precision": round9(report.per_class.real.precision),
                        "recall": round9(report.per_class.real.recall),
                        "f1": round9(report.per_class.real.f1),
                    },
                },
                "weighted": {
                    "precision": round9(report.weighted.precision),
                    "recall": round9(report.weighted.recall),
                    "f1": round9(report.weighted.f1),
                },
                "support": {
                    "fake": report.support_fake,
                    "real": report.support_real,
                },
                "zero_denominator_flags": report.per_class.zero_denominator_flags,
            });
            let mut text = serde_json::to_string_pretty(&value).expect("serializable value");
            text.push('\n');
            text
        }
    }
}
