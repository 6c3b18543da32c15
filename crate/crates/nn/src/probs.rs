use fakestack_data::Label;
use serde::{Deserialize, Serialize};

use crate::{NnError, Result};

/// A binary class distribution, always ordered (p_fake, p_real) to match the
/// FAKE = index 0, REAL = index 1 convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities {
    pub p_fake: f64,
    pub p_real: f64,
}

impl ClassProbabilities {
    /// Validates ranges and the sum-to-one invariant (±1e-6).
    pub fn new(p_fake: f64, p_real: f64) -> Result<Self> {
        let reject = |reason: &str| {
            Err(NnError::Probability {
                p_fake,
                p_real,
                reason: reason.to_string(),
            })
        };
        if !p_fake.is_finite() || !p_real.is_finite() {
            return reject("non-finite entry");
        }
        if !(0.0..=1.0).contains(&p_fake) || !(0.0..=1.0).contains(&p_real) {
            return reject("entry outside [0,1]");
        }
        if (p_fake + p_real - 1.0).abs() > 1e-6 {
            return reject("probabilities do not sum to 1 within 1e-6");
        }
        Ok(Self { p_fake, p_real })
    }

    /// Argmax with the deterministic tie rule: an exact tie predicts FAKE,
    /// the costlier class to miss.
    pub fn predicted(&self) -> Label {
        if self.p_real > self.p_fake {
            Label::Real
        } else {
            Label::Fake
        }
    }

    /// Probability of the given class.
    pub fn of(&self, label: Label) -> f64 {
        match label {
            Label::Fake => self.p_fake,
            Label::Real => self.p_real,
        }
    }
}

/// One model's verdict on one post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub post_id: String,
    pub model_name: String,
    pub probs: ClassProbabilities,
    pub predicted: Label,
}

impl PredictionRecord {
    /// Builds a record, deriving `predicted` from the probabilities so the
    /// argmax invariant holds by construction.
    pub fn new(post_id: impl Into<String>, model_name: impl Into<String>, probs: ClassProbabilities) -> Self {
        Self {
            post_id: post_id.into(),
            model_name: model_name.into(),
            predicted: probs.predicted(),
            probs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation_rejects_bad_pairs() {
        assert!(ClassProbabilities::new(0.25, 0.75).is_ok());
        assert!(ClassProbabilities::new(0.6, 0.6).is_err());
        assert!(ClassProbabilities::new(-0.1, 1.1).is_err());
        assert!(ClassProbabilities::new(f64::NAN, 0.5).is_err());
        // Within the 1e-6 tolerance is fine.
        assert!(ClassProbabilities::new(0.4999997, 0.5).is_ok());
    }

    #[test]
    fn exact_tie_predicts_fake() {
        let p = ClassProbabilities::new(0.5, 0.5).unwrap();
        assert_eq!(p.predicted(), Label::Fake);
    }

    proptest! {
        #[test]
        fn predicted_is_argmax(p_fake in 0.0f64..=1.0) {
            let probs = ClassProbabilities::new(p_fake, 1.0 - p_fake).unwrap();
            let expected = if probs.p_real > probs.p_fake { Label::Real } else { Label::Fake };
            prop_assert_eq!(probs.predicted(), expected);
            prop_assert_eq!(PredictionRecord::new("x", "m", probs).predicted, expected);
        }
    }
}
