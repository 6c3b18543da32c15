//! Named ensemble compositions. The three standard variants grow from a
//! four-member core to the full eight-backbone stack; `custom` covers
//! ad-hoc member lists from experiment configs.

use serde::{Deserialize, Serialize};

use crate::{EnsembleError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    V1,
    V2,
    V3,
    Custom,
}

impl VariantName {
    pub fn as_str(&self) -> &'static str {
        match self {
            VariantName::V1 => "v1",
            VariantName::V2 => "v2",
            VariantName::V3 => "v3",
            VariantName::Custom => "custom",
        }
    }
}

impl std::fmt::Display for VariantName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleVariant {
    pub name: VariantName,
    pub members: Vec<String>,
}

const V1_MEMBERS: [&str; 4] = ["roberta", "bert", "xlnet", "gpt2"];
const V2_EXTRA: [&str; 3] = ["albert", "bart", "deberta"];
const V3_EXTRA: [&str; 1] = ["distilroberta"];

/// Resolves a variant name to its fixed member list.
pub fn define_variant(name: &str) -> Result<EnsembleVariant> {
    let mut members: Vec<String> = V1_MEMBERS.iter().map(|s| s.to_string()).collect();
    let name = match name {
        "v1" => VariantName::V1,
        "v2" => {
            members.extend(V2_EXTRA.iter().map(|s| s.to_string()));
            VariantName::V2
        }
        "v3" => {
            members.extend(V2_EXTRA.iter().map(|s| s.to_string()));
            members.extend(V3_EXTRA.iter().map(|s| s.to_string()));
            VariantName::V3
        }
        other => {
            return Err(EnsembleError::Argument(format!(
                "unknown ensemble variant {other:?}; expected v1, v2, or v3"
            )))
        }
    };
    Ok(EnsembleVariant { name, members })
}

impl EnsembleVariant {
    /// An ad-hoc variant over an explicit member list.
    pub fn custom(members: Vec<String>) -> Result<Self> {
        if members.is_empty() {
            return Err(EnsembleError::Argument(
                "a custom variant needs at least one member".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &members {
            if !seen.insert(m.clone()) {
                return Err(EnsembleError::Argument(format!(
                    "duplicate member {m:?} in custom variant"
                )));
            }
        }
        Ok(Self {
            name: VariantName::Custom,
            members,
        })
    }

    /// Tag used in prediction records, e.g. `ensemble:v3`.
    pub fn model_name(&self) -> String {
        format!("ensemble:{}", self.name)
    }
}
