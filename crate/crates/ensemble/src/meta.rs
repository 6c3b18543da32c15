//! The stacking meta-learner: a small feed-forward network by default, with
//! random-forest and SVM alternatives. The member order seen at training
//! time is frozen into the learner and enforced at prediction time — the
//! feature columns are positional.

use std::fs;
use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use fakestack_backbones::{
    train_classic_head, train_random_forest, ClassicHeadModel, ClassicKind, RandomForestModel,
    TrainedBaseModel, FOREST_DEFAULT_TREES,
};
use fakestack_data::{Label, LabeledPost};
use fakestack_nn::{
    build_meta_net, load_network, save_network, train_network, ClassProbabilities, MetaNetConfig,
    NetworkParams, PredictionRecord, TrainHistory, TrainSettings,
};

use crate::matrix::{build_meta_features, MetaFeatureMatrix};
use crate::variant::EnsembleVariant;
use crate::{EnsembleError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    Neural,
    RandomForest,
    Svm,
}

impl MetaKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetaKind::Neural => "neural",
            MetaKind::RandomForest => "random_forest",
            MetaKind::Svm => "svm",
        }
    }
}

impl std::str::FromStr for MetaKind {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neural" => Ok(MetaKind::Neural),
            "random_forest" => Ok(MetaKind::RandomForest),
            "svm" => Ok(MetaKind::Svm),
            other => Err(EnsembleError::Argument(format!(
                "unknown meta-learner kind {other:?}; expected neural, random_forest, or svm"
            ))),
        }
    }
}

/// Kind-tagged meta-learner configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum MetaConfig {
    Neural {
        net: MetaNetConfig,
        train: TrainSettings,
    },
    RandomForest {
        trees: usize,
        seed: u64,
    },
    Svm,
}

impl MetaConfig {
    /// The default neural meta-learner with training settings suited to the
    /// narrow feature matrix: sharp decision surfaces need many cheap epochs
    /// and no weight decay.
    pub fn neural_default(seed: u64) -> Self {
        MetaConfig::Neural {
            net: MetaNetConfig::default(),
            train: TrainSettings {
                learning_rate: 3e-3,
                epochs: 200,
                batch_size: 32,
                seed,
                weight_decay: 0.0,
                ..TrainSettings::default()
            },
        }
    }

    pub fn forest_default(seed: u64) -> Self {
        MetaConfig::RandomForest {
            trees: FOREST_DEFAULT_TREES,
            seed,
        }
    }

    pub fn kind(&self) -> MetaKind {
        match self {
            MetaConfig::Neural { .. } => MetaKind::Neural,
            MetaConfig::RandomForest { .. } => MetaKind::RandomForest,
            MetaConfig::Svm => MetaKind::Svm,
        }
    }

    pub fn for_kind(kind: MetaKind, seed: u64) -> Self {
        match kind {
            MetaKind::Neural => Self::neural_default(seed),
            MetaKind::RandomForest => Self::forest_default(seed),
            MetaKind::Svm => MetaConfig::Svm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum MetaInner {
    Net(NetworkParams),
    Forest(RandomForestModel),
    Svm(ClassicHeadModel),
}

/// A trained stacking learner with its frozen member order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaLearner {
    kind: MetaKind,
    inner: MetaInner,
    member_order: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaManifest {
    kind: MetaKind,
    member_order: Vec<String>,
}

impl MetaLearner {
    pub fn kind(&self) -> MetaKind {
        self.kind
    }

    pub fn member_order(&self) -> &[String] {
        &self.member_order
    }

    /// Class probabilities for raw feature rows (columns must follow
    /// `member_order`).
    pub fn predict_rows(&self, features: &ArrayView2<f64>) -> Result<Vec<ClassProbabilities>> {
        if features.ncols() != self.member_order.len() {
            return Err(EnsembleError::Argument(format!(
                "feature matrix has {} columns, meta-learner expects {}",
                features.ncols(),
                self.member_order.len()
            )));
        }
        match &self.inner {
            MetaInner::Net(net) => Ok(net.probabilities(features)?),
            MetaInner::Forest(forest) => Ok(forest.probabilities(features)?),
            MetaInner::Svm(svm) => Ok(svm.probabilities(features)?),
        }
    }

    /// Predicts a matrix, checking its member order against the frozen one.
    pub fn predict_matrix(
        &self,
        matrix: &MetaFeatureMatrix,
        model_name: &str,
    ) -> Result<Vec<PredictionRecord>> {
        if matrix.member_order() != self.member_order.as_slice() {
            return Err(EnsembleError::Configuration {
                expected: self.member_order.clone(),
                actual: matrix.member_order().to_vec(),
            });
        }
        let probs = self.predict_rows(&matrix.values().view())?;
        Ok(matrix
            .post_ids()
            .iter()
            .zip(probs)
            .map(|(id, p)| PredictionRecord::new(id.clone(), model_name.to_string(), p))
            .collect())
    }

    /// Writes `meta.json` plus either a network checkpoint directory or a
    /// serialized classic model.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = MetaManifest {
            kind: self.kind,
            member_order: self.member_order.clone(),
        };
        fs::write(
            dir.join("meta.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        match &self.inner {
            MetaInner::Net(net) => {
                save_network(net, &dir.join("network"), None)?;
            }
            MetaInner::Forest(forest) => {
                fs::write(dir.join("forest.json"), serde_json::to_string(forest)?)?;
            }
            MetaInner::Svm(svm) => {
                fs::write(dir.join("svm.json"), serde_json::to_string(svm)?)?;
            }
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: MetaManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let inner = match manifest.kind {
            MetaKind::Neural => {
                let (net, _) = load_network(&dir.join("network"))?;
                MetaInner::Net(net)
            }
            MetaKind::RandomForest => MetaInner::Forest(serde_json::from_str(
                &fs::read_to_string(dir.join("forest.json"))?,
            )?),
            MetaKind::Svm => MetaInner::Svm(serde_json::from_str(&fs::read_to_string(
                dir.join("svm.json"),
            )?)?),
        };
        Ok(Self {
            kind: manifest.kind,
            inner,
            member_order: manifest.member_order,
        })
    }
}

/// Trains a meta-learner on a labeled feature matrix. The matrix's member
/// order is frozen into the result.
///
/// Returns the neural training history when the neural kind is used.
pub fn train_meta(
    features: &MetaFeatureMatrix,
    cfg: &MetaConfig,
) -> Result<(MetaLearner, Option<TrainHistory>)> {
    let labels = features.labels().ok_or_else(|| {
        EnsembleError::Argument("meta training requires a labeled feature matrix".into())
    })?;
    let n_real = labels.iter().filter(|l| **l == Label::Real).count();
    if n_real == 0 || n_real == labels.len() {
        return Err(EnsembleError::DegenerateData(format!(
            "meta-training labels are single-class ({} real of {})",
            n_real,
            labels.len()
        )));
    }

    let member_order = features.member_order().to_vec();
    let values = features.values();
    let (inner, history) = match cfg {
        MetaConfig::Neural { net, train } => {
            let init = build_meta_net(net, member_order.len(), train.seed)?;
            let (trained, history) = train_network(&init, &values.view(), labels, train)?;
            (MetaInner::Net(trained), Some(history))
        }
        MetaConfig::RandomForest { trees, seed } => {
            let forest = train_random_forest(&values.view(), labels, *trees, *seed)?;
            (MetaInner::Forest(forest), None)
        }
        MetaConfig::Svm => {
            let svm = train_classic_head(&values.view(), labels, ClassicKind::SvmRbf)?;
            (MetaInner::Svm(svm), None)
        }
    };
    Ok((
        MetaLearner {
            kind: cfg.kind(),
            inner,
            member_order,
        },
        history,
    ))
}

/// Runs every member on `posts`, assembles the feature matrix, and applies
/// the meta-learner. Records carry `model_name = "ensemble:<variant>"`.
pub fn ensemble_predict(
    members: &[&TrainedBaseModel],
    meta: &MetaLearner,
    variant: &EnsembleVariant,
    posts: &[LabeledPost],
) -> Result<Vec<PredictionRecord>> {
    let actual: Vec<String> = members
        .iter()
        .map(|m| m.backbone.name.to_string())
        .collect();
    if actual != meta.member_order || variant.members != meta.member_order {
        return Err(EnsembleError::Configuration {
            expected: meta.member_order.clone(),
            actual: if actual != meta.member_order {
                actual
            } else {
                variant.members.clone()
            },
        });
    }
    if posts.is_empty() {
        return Err(EnsembleError::Argument(
            "ensemble_predict needs at least one post".into(),
        ));
    }

    let mut records_by_model = std::collections::BTreeMap::new();
    for member in members {
        let records = member.predict_batch(posts)?;
        records_by_model.insert(member.backbone.name.to_string(), records);
    }
    let matrix = build_meta_features(&records_by_model, &meta.member_order, None)?;
    meta.predict_matrix(&matrix, &variant.model_name())
}
