use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{BackboneError, Result};

/// The eight supported backbone families, in their fixed registry order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackboneName {
    Bert,
    Gpt2,
    Xlnet,
    Roberta,
    Distilroberta,
    Albert,
    Bart,
    Deberta,
}

impl BackboneName {
    /// All families in registry order.
    pub const ALL: [BackboneName; 8] = [
        BackboneName::Bert,
        BackboneName::Gpt2,
        BackboneName::Xlnet,
        BackboneName::Roberta,
        BackboneName::Distilroberta,
        BackboneName::Albert,
        BackboneName::Bart,
        BackboneName::Deberta,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BackboneName::Bert => "bert",
            BackboneName::Gpt2 => "gpt2",
            BackboneName::Xlnet => "xlnet",
            BackboneName::Roberta => "roberta",
            BackboneName::Distilroberta => "distilroberta",
            BackboneName::Albert => "albert",
            BackboneName::Bart => "bart",
            BackboneName::Deberta => "deberta",
        }
    }
}

impl fmt::Display for BackboneName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackboneName {
    type Err = BackboneError;

    fn from_str(s: &str) -> Result<Self> {
        BackboneName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| BackboneError::UnknownBackbone(s.to_string()))
    }
}

/// Whether a backbone refers to the published base checkpoint or to the
/// miniature stand-in used for desk-scale runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SizeClass {
    #[serde(rename = "base")]
    Base,
    #[default]
    #[serde(rename = "small-proxy")]
    SmallProxy,
}

impl SizeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SizeClass::Base => "base",
            SizeClass::SmallProxy => "small-proxy",
        }
    }
}

impl FromStr for SizeClass {
    type Err = BackboneError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(SizeClass::Base),
            "small-proxy" => Ok(SizeClass::SmallProxy),
            other => Err(BackboneError::Argument(format!(
                "unknown size class '{other}' (expected 'base' or 'small-proxy')"
            ))),
        }
    }
}

/// Identifies one concrete backbone: a family plus a size class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BackboneId {
    pub name: BackboneName,
    pub size_class: SizeClass,
}

impl BackboneId {
    pub fn base(name: BackboneName) -> Self {
        Self {
            name,
            size_class: SizeClass::Base,
        }
    }

    pub fn small_proxy(name: BackboneName) -> Self {
        Self {
            name,
            size_class: SizeClass::SmallProxy,
        }
    }
}

impl fmt::Display for BackboneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.name, self.size_class.as_str())
    }
}

/// The fixed, ordered list of the eight supported backbones (base size).
pub fn registry() -> Vec<BackboneId> {
    registry_with(SizeClass::Base)
}

/// The registry at an explicit size class.
pub fn registry_with(size_class: SizeClass) -> Vec<BackboneId> {
    BackboneName::ALL
        .iter()
        .map(|&name| BackboneId { name, size_class })
        .collect()
}

/// Hidden width of the published base checkpoint of each family. Checked
/// against loaded base-class weights.
pub fn base_hidden_width(_name: BackboneName) -> usize {
    // Every supported family publishes a 768-wide base model.
    768
}

/// How a sequence of token vectors is reduced to one classification vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// The first token's vector (the classification token for bidirectional
    /// encoders).
    FirstToken,
    /// The last non-padding token's vector.
    LastToken,
    /// The mean over non-padding token vectors.
    Mean,
}

impl Pooling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pooling::FirstToken => "first_token",
            Pooling::LastToken => "last_token",
            Pooling::Mean => "mean",
        }
    }
}

impl FromStr for Pooling {
    type Err = BackboneError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_token" => Ok(Pooling::FirstToken),
            "last_token" => Ok(Pooling::LastToken),
            "mean" => Ok(Pooling::Mean),
            other => Err(BackboneError::Argument(format!(
                "unknown pooling '{other}' (expected first_token, last_token, or mean)"
            ))),
        }
    }
}

/// Per-family pooling conventions: the classification token for
/// bidirectional encoders, the last non-padding token for the autoregressive
/// gpt2, and the end-of-sequence token — which this tokenizer always places
/// last — for bart.
pub fn default_pooling(name: BackboneName) -> Pooling {
    match name {
        BackboneName::Gpt2 | BackboneName::Bart => Pooling::LastToken,
        _ => Pooling::FirstToken,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_the_eight_families_in_fixed_order() {
        let reg = registry();
        assert_eq!(reg.len(), 8);
        assert_eq!(reg[0].name, BackboneName::Bert);
        assert_eq!(reg[3].name, BackboneName::Roberta);
        assert_eq!(reg[7].name, BackboneName::Deberta);
        assert_eq!(registry(), registry());
    }

    #[test]
    fn names_round_trip_through_strings() {
        for name in BackboneName::ALL {
            assert_eq!(name.as_str().parse::<BackboneName>().unwrap(), name);
        }
        assert!(matches!(
            "gpt3".parse::<BackboneName>(),
            Err(BackboneError::UnknownBackbone(_))
        ));
    }

    #[test]
    fn pooling_defaults_follow_family_conventions() {
        assert_eq!(default_pooling(BackboneName::Bert), Pooling::FirstToken);
        assert_eq!(default_pooling(BackboneName::Xlnet), Pooling::FirstToken);
        assert_eq!(default_pooling(BackboneName::Gpt2), Pooling::LastToken);
        assert_eq!(default_pooling(BackboneName::Bart), Pooling::LastToken);
    }
}
