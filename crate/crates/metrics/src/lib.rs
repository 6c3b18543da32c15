//! Exact confusion-matrix evaluation for the binary fake/real task.
//!
//! All metrics are plain f64 arithmetic over integer counts — no sampling,
//! no estimation — so results are reproducible to the last bit. Weighted
//! (support-weighted) averaging is the canonical aggregate; its recall
//! coincides with accuracy by the algebraic identity
//! Σ_c (n_c/N)·(TP_c/n_c) = trace/N.

mod confusion;
mod error;
mod report;

pub use confusion::{confusion, ConfusionMatrix};
pub use error::MetricsError;
pub use report::{
    evaluate, per_class, render_report, report_from_confusion, weighted, ClassMetrics,
    EvaluationReport, PerClassMetrics, ReportFormat, WeightedMetrics,
};

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, MetricsError>;
