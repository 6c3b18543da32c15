//! Contract tests for joint fine-tuning: leakage rejection, learning-rate
//! guard rails, the epochs=0 identity, deterministic seeding, exact agreement
//! between recorded validation accuracy and a fresh evaluation, and
//! memorization of a small separable corpus.

use fakestack_backbones::{
    fine_tune, BackboneError, BackboneId, BackboneName, FsProvider, MlpHeadConfig, TrainConfig,
    WeightsProvider,
};
use fakestack_data::{DatasetSplit, Label, LabeledPost, SplitName};
use fakestack_metrics::{confusion, weighted};
use tempfile::TempDir;

const REAL_WORDS: [&str; 8] = [
    "trial", "study", "data", "hospital", "evidence", "doses", "peer", "review",
];
const FAKE_WORDS: [&str; 8] = [
    "hoax", "bleach", "microchip", "conspiracy", "miracle", "secret", "cure", "plot",
];

/// A tiny strongly-separable corpus: each class draws from its own vocabulary.
fn toy_split(name: SplitName, id_prefix: &str, count: usize) -> DatasetSplit {
    let posts: Vec<LabeledPost> = (0..count)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Real } else { Label::Fake };
            let words = if label == Label::Real { &REAL_WORDS } else { &FAKE_WORDS };
            let text = (0..5)
                .map(|k| words[(i + 2 * k) % words.len()])
                .collect::<Vec<_>>()
                .join(" ");
            LabeledPost::new(format!("{id_prefix}{i:03}"), text, label)
        })
        .collect();
    DatasetSplit::new(name, posts).unwrap()
}

fn provider(dir: &TempDir) -> FsProvider {
    FsProvider::new(Some(dir.path().to_path_buf()), true).unwrap()
}

fn head_cfg() -> MlpHeadConfig {
    MlpHeadConfig {
        hidden_units: 32,
        dropout_rate: 0.0,
        ..MlpHeadConfig::default()
    }
}

#[test]
fn learning_rate_outside_the_sanctioned_range_is_rejected() {
    let cfg = TrainConfig {
        learning_rate: 5e-2,
        ..TrainConfig::default()
    };
    let err = cfg.validate().unwrap_err();
    match err {
        BackboneError::Argument(msg) => {
            assert!(msg.contains("learning_rate"), "{msg}");
            assert!(msg.contains("force_learning_rate"), "{msg}");
        }
        other => panic!("expected argument error, got {other:?}"),
    }
    let forced = TrainConfig {
        learning_rate: 5e-2,
        force_learning_rate: true,
        ..TrainConfig::default()
    };
    forced.validate().unwrap();
}

#[test]
fn train_validation_id_overlap_is_a_leakage_error() {
    let dir = TempDir::new().unwrap();
    let provider = provider(&dir);
    let train = toy_split(SplitName::Train, "p", 8);
    // Same prefix: every validation id collides with a train id.
    let val = toy_split(SplitName::Validation, "p", 4);
    let err = fine_tune(
        &provider,
        &BackboneId::small_proxy(BackboneName::Bert),
        &head_cfg(),
        &train,
        &val,
        &TrainConfig::default(),
    )
    .unwrap_err();
    match err {
        BackboneError::Leakage { ids } => {
            assert_eq!(ids.len(), 4);
            assert!(ids.contains(&"p000".to_string()));
        }
        other => panic!("expected leakage error, got {other:?}"),
    }
}

#[test]
fn zero_epochs_returns_the_pretrained_weights_untouched() {
    let dir = TempDir::new().unwrap();
    let provider = provider(&dir);
    let id = BackboneId::small_proxy(BackboneName::Roberta);
    let pretrained_fp = provider.fetch(&id).unwrap().encoder.fingerprint();
    let train = toy_split(SplitName::Train, "t", 8);
    let val = toy_split(SplitName::Validation, "v", 4);
    let cfg = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    let (model, history) = fine_tune(&provider, &id, &head_cfg(), &train, &val, &cfg).unwrap();
    assert_eq!(model.encoder.fingerprint(), pretrained_fp);
    assert!(history.epochs.is_empty());
    assert_eq!(history.best_epoch, None);
    assert!(!history.stopped_early);
}

#[test]
fn fine_tuning_is_deterministic_for_a_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let provider = provider(&dir);
    let id = BackboneId::small_proxy(BackboneName::Distilroberta);
    let train = toy_split(SplitName::Train, "t", 8);
    let val = toy_split(SplitName::Validation, "v", 4);
    let cfg = TrainConfig {
        learning_rate: 1e-4,
        epochs: 2,
        batch_size: 4,
        seed: 17,
        early_stop_patience: 0,
        max_seq_len: 32,
        force_learning_rate: false,
    };
    let (m1, h1) = fine_tune(&provider, &id, &head_cfg(), &train, &val, &cfg).unwrap();
    let (m2, h2) = fine_tune(&provider, &id, &head_cfg(), &train, &val, &cfg).unwrap();
    assert_eq!(m1.fingerprint(), m2.fingerprint());
    assert_eq!(h1.epochs.len(), h2.epochs.len());
    for (a, b) in h1.epochs.iter().zip(&h2.epochs) {
        assert_eq!(a.train_loss, b.train_loss);
        assert_eq!(a.val_accuracy, b.val_accuracy);
    }
    // A different seed must actually change the trained weights.
    let reseeded = TrainConfig { seed: 18, ..cfg };
    let (m3, _) = fine_tune(&provider, &id, &head_cfg(), &train, &val, &reseeded).unwrap();
    assert_ne!(m1.fingerprint(), m3.fingerprint());
}

#[test]
fn recorded_validation_accuracy_matches_a_fresh_evaluation_exactly() {
    let dir = TempDir::new().unwrap();
    let provider = provider(&dir);
    let id = BackboneId::small_proxy(BackboneName::Albert);
    let train = toy_split(SplitName::Train, "t", 12);
    let val = toy_split(SplitName::Validation, "v", 6);
    let cfg = TrainConfig {
        learning_rate: 1e-4,
        epochs: 3,
        batch_size: 4,
        seed: 5,
        early_stop_patience: 0,
        max_seq_len: 32,
        force_learning_rate: false,
    };
    let (model, history) = fine_tune(&provider, &id, &head_cfg(), &train, &val, &cfg).unwrap();
    let best = history.best_epoch.expect("trained for three epochs");
    let recorded = history
        .epochs
        .iter()
        .find(|e| e.epoch == best)
        .expect("best epoch recorded")
        .val_accuracy;
    let records = model.predict_batch(val.posts()).unwrap();
    let fresh = weighted(&confusion(&records, &val).unwrap()).unwrap().accuracy;
    assert_eq!(recorded, fresh);
    assert!(history.epochs.len() <= 3);
}

#[test]
fn a_small_separable_corpus_is_memorized() {
    let dir = TempDir::new().unwrap();
    let provider = provider(&dir);
    let id = BackboneId::small_proxy(BackboneName::Roberta);
    let train = toy_split(SplitName::Train, "t", 32);
    let val = toy_split(SplitName::Validation, "v", 8);
    let cfg = TrainConfig {
        learning_rate: 1e-4,
        epochs: 30,
        batch_size: 2,
        seed: 7,
        early_stop_patience: 0,
        max_seq_len: 32,
        force_learning_rate: false,
    };
    let (model, _) = fine_tune(&provider, &id, &head_cfg(), &train, &val, &cfg).unwrap();
    let records = model.predict_batch(train.posts()).unwrap();
    let accuracy = weighted(&confusion(&records, &train).unwrap())
        .unwrap()
        .accuracy;
    assert!(
        accuracy >= 0.95,
        "training accuracy {accuracy} after 30 epochs"
    );
}
