use std::collections::BTreeSet;
use std::collections::HashMap;

use fakestack_data::{DatasetSplit, Label};
use fakestack_nn::PredictionRecord;
use serde::{Deserialize, Serialize};

use crate::{MetricsError, Result};

/// 2×2 confusion counts indexed (gold, predicted) with FAKE = 0, REAL = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[usize; 2]; 2],
}

impl ConfusionMatrix {
    /// Builds a matrix from raw counts indexed (gold, predicted).
    pub fn from_counts(counts: [[usize; 2]; 2]) -> Self {
        Self { counts }
    }

    pub fn count(&self, gold: Label, predicted: Label) -> usize {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Number of gold samples of a class (the row sum).
    pub fn support(&self, class: Label) -> usize {
        self.counts[class.index()].iter().sum()
    }

    pub fn correct(&self) -> usize {
        self.counts[0][0] + self.counts[1][1]
    }
}

/// Tallies predictions against gold labels by id. The predictions must be a
/// bijection onto the gold ids: anything missing, unknown, or duplicated is
/// reported in one coverage error.
pub fn confusion(preds: &[PredictionRecord], golds: &DatasetSplit) -> Result<ConfusionMatrix> {
    let gold_by_id: HashMap<&str, Label> =
        golds.iter().map(|p| (p.id.as_str(), p.label)).collect();

    let mut counts = [[0usize; 2]; 2];
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut extra: BTreeSet<String> = BTreeSet::new();
    for record in preds {
        let id = record.post_id.as_str();
        if !seen.insert(id) {
            extra.insert(id.to_string());
            continue;
        }
        match gold_by_id.get(id) {
            Some(gold) => counts[gold.index()][record.predicted.index()] += 1,
            None => {
                extra.insert(id.to_string());
            }
        }
    }
    let missing: Vec<String> = golds
        .ids()
        .filter(|id| !seen.contains(id))
        .map(String::from)
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(MetricsError::Coverage {
            missing,
            extra: extra.into_iter().collect(),
        });
    }
    Ok(ConfusionMatrix { counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fakestack_data::{LabeledPost, SplitName};
    use fakestack_nn::ClassProbabilities;

    fn golds(labels: &[Label]) -> DatasetSplit {
        let posts = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| LabeledPost::new(format!("p{i}"), "text", l))
            .collect();
        DatasetSplit::new(SplitName::Test, posts).unwrap()
    }

    fn pred(id: &str, label: Label) -> PredictionRecord {
        let probs = match label {
            Label::Fake => ClassProbabilities::new(0.9, 0.1).unwrap(),
            Label::Real => ClassProbabilities::new(0.1, 0.9).unwrap(),
        };
        PredictionRecord::new(id, "m", probs)
    }

    #[test]
    fn four_sample_tally_matches_the_hand_count() {
        let golds = golds(&[Label::Fake, Label::Fake, Label::Real, Label::Real]);
        let preds = vec![
            pred("p0", Label::Fake),
            pred("p1", Label::Real),
            pred("p2", Label::Real),
            pred("p3", Label::Real),
        ];
        let cm = confusion(&preds, &golds).unwrap();
        assert_eq!(cm.count(Label::Fake, Label::Fake), 1);
        assert_eq!(cm.count(Label::Fake, Label::Real), 1);
        assert_eq!(cm.count(Label::Real, Label::Real), 2);
        assert_eq!(cm.count(Label::Real, Label::Fake), 0);
        assert_eq!(cm.total(), 4);
        assert_eq!(cm.correct(), 3);
    }

    #[test]
    fn all_correct_means_zero_off_diagonal() {
        let labels = [Label::Fake, Label::Real, Label::Real];
        let golds = golds(&labels);
        let preds: Vec<_> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| pred(&format!("p{i}"), l))
            .collect();
        let cm = confusion(&preds, &golds).unwrap();
        assert_eq!(cm.count(Label::Fake, Label::Real), 0);
        assert_eq!(cm.count(Label::Real, Label::Fake), 0);
        assert_eq!(cm.correct(), 3);
    }

    #[test]
    fn missing_and_extra_ids_are_both_reported() {
        let golds = golds(&[Label::Fake, Label::Real]);
        let preds = vec![pred("p0", Label::Fake), pred("ghost", Label::Real)];
        match confusion(&preds, &golds) {
            Err(MetricsError::Coverage { missing, extra }) => {
                assert_eq!(missing, vec!["p1".to_string()]);
                assert_eq!(extra, vec!["ghost".to_string()]);
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_prediction_ids_break_the_bijection() {
        let golds = golds(&[Label::Fake, Label::Real]);
        let preds = vec![
            pred("p0", Label::Fake),
            pred("p0", Label::Fake),
            pred("p1", Label::Real),
        ];
        match confusion(&preds, &golds) {
            Err(MetricsError::Coverage { missing, extra }) => {
                assert!(missing.is_empty());
                assert_eq!(extra, vec!["p0".to_string()]);
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
    }
}
