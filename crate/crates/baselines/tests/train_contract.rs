//! Training-loop contract: memorization capacity of every architecture,
//! determinism, leakage rejection, early-stopping bookkeeping, and the
//! zero-epoch identity.

use fakestack_baselines::{
    baseline_train_defaults, build_baseline, build_vocab, train_baseline, BaselineConfig,
    BaselineError, BaselineKind, BaselineModel, TrainConfig, ALL_BASELINE_KINDS,
    BASELINE_LR_DEFAULT,
};
use fakestack_data::{DatasetSplit, Label, LabeledPost, SplitName};
use fakestack_metrics::{confusion, weighted};

const REAL_WORDS: [&str; 8] = [
    "studies", "confirm", "vaccine", "efficacy", "hospital", "reports", "doctors", "data",
];
const FAKE_WORDS: [&str; 8] = [
    "miracle", "cure", "conspiracy", "hoax", "secret", "exposed", "shocking", "banned",
];

fn toy_post(id: String, index: usize, label: Label) -> LabeledPost {
    let words = match label {
        Label::Real => &REAL_WORDS,
        Label::Fake => &FAKE_WORDS,
    };
    let text: Vec<&str> = (0..5).map(|k| words[(index + 2 * k) % words.len()]).collect();
    LabeledPost::new(id, text.join(" "), label)
}

fn toy_split(name: SplitName, prefix: &str, count: usize) -> DatasetSplit {
    let posts = (0..count)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Real } else { Label::Fake };
            toy_post(format!("{prefix}{i:03}"), i, label)
        })
        .collect();
    DatasetSplit::new(name, posts).unwrap()
}

fn tiny_config(kind: BaselineKind) -> BaselineConfig {
    let (filters, filter_sizes) = if kind.convolutional() {
        (Some(8), Some(vec![1, 2, 3]))
    } else {
        (None, None)
    };
    BaselineConfig {
        kind,
        embedding_dim: 16,
        hidden_units: 8,
        filters,
        filter_sizes,
        dropout: 0.0,
    }
}

fn build_for(kind: BaselineKind, train: &DatasetSplit, seed: u64) -> BaselineModel {
    let vocab = build_vocab(train, 1).unwrap();
    build_baseline(&tiny_config(kind), vocab, seed).unwrap()
}

fn train_accuracy(model: &BaselineModel, split: &DatasetSplit) -> f64 {
    let preds = model.predict_batch(split.posts()).unwrap();
    weighted(&confusion(&preds, split).unwrap()).unwrap().accuracy
}

#[test]
fn every_kind_memorizes_a_toy_corpus() {
    let train = toy_split(SplitName::Train, "t", 32);
    let val = toy_split(SplitName::Validation, "v", 8);
    let cfg = TrainConfig {
        epochs: 100,
        batch_size: 8,
        seed: 13,
        early_stop_patience: 0,
        max_seq_len: 32,
        ..baseline_train_defaults()
    };
    for kind in ALL_BASELINE_KINDS {
        let model = build_for(kind, &train, 101);
        let (trained, history) = train_baseline(model, &train, &val, &cfg).unwrap();
        let acc = train_accuracy(&trained, &train);
        assert!(
            acc >= 0.95,
            "{kind:?} failed to memorize: train accuracy {acc}, history {history:?}"
        );
    }
}

#[test]
fn default_hyperparameters_use_the_baseline_learning_rate() {
    let cfg = baseline_train_defaults();
    assert_eq!(cfg.learning_rate, BASELINE_LR_DEFAULT);
    assert_eq!(cfg.learning_rate, 1e-3);
    assert_eq!(cfg.epochs, 10);
    assert_eq!(cfg.batch_size, 32);
    cfg.validate().unwrap();
}

#[test]
fn training_is_deterministic_per_seed() {
    let train = toy_split(SplitName::Train, "t", 16);
    let val = toy_split(SplitName::Validation, "v", 6);
    let cfg = TrainConfig {
        epochs: 4,
        batch_size: 4,
        seed: 5,
        max_seq_len: 32,
        ..baseline_train_defaults()
    };
    let run = |seed: u64| {
        let model = build_for(BaselineKind::BilstmAttn, &train, 50);
        let cfg = TrainConfig { seed, ..cfg.clone() };
        train_baseline(model, &train, &val, &cfg).unwrap()
    };
    let (m1, h1) = run(5);
    let (m2, h2) = run(5);
    let (m3, h3) = run(6);
    assert_eq!(h1, h2);
    assert_eq!(m1.fingerprint(), m2.fingerprint());
    assert!(h1 != h3 || m1.fingerprint() != m3.fingerprint());
}

#[test]
fn shared_ids_between_train_and_validation_are_rejected() {
    let train = toy_split(SplitName::Train, "t", 8);
    let leaky_posts: Vec<LabeledPost> = train.posts()[0..4].to_vec();
    let val = DatasetSplit::new(SplitName::Validation, leaky_posts).unwrap();
    let model = build_for(BaselineKind::Cnn1d, &train, 1);
    let err = train_baseline(model, &train, &val, &baseline_train_defaults()).unwrap_err();
    match err {
        BaselineError::Leakage { ids } => {
            assert_eq!(ids.len(), 4);
            assert!(ids.contains(&"t000".to_string()));
        }
        other => panic!("expected leakage error, got {other}"),
    }
}

#[test]
fn zero_epochs_returns_the_model_untouched() {
    let train = toy_split(SplitName::Train, "t", 8);
    let val = toy_split(SplitName::Validation, "v", 4);
    let model = build_for(BaselineKind::Rcnn, &train, 77);
    let before = model.fingerprint();
    let cfg = TrainConfig { epochs: 0, max_seq_len: 32, ..baseline_train_defaults() };
    let (after, history) = train_baseline(model, &train, &val, &cfg).unwrap();
    assert_eq!(after.fingerprint(), before);
    assert!(history.epochs.is_empty());
    assert_eq!(history.best_epoch, None);
    assert!(!history.stopped_early);
}

#[test]
fn history_never_exceeds_the_epoch_budget_and_tracks_best() {
    let train = toy_split(SplitName::Train, "t", 16);
    let val = toy_split(SplitName::Validation, "v", 6);
    let model = build_for(BaselineKind::BilstmAttn, &train, 3);
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 4,
        seed: 9,
        early_stop_patience: 2,
        max_seq_len: 32,
        ..baseline_train_defaults()
    };
    let (trained, history) = train_baseline(model, &train, &val, &cfg).unwrap();
    assert!(history.epochs.len() <= 30);
    let best = history.best_epoch.expect("at least one epoch ran");
    let best_entry = history.epochs.iter().find(|e| e.epoch == best).unwrap();
    let max_acc = history
        .epochs
        .iter()
        .map(|e| e.val_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best_entry.val_accuracy, max_acc);
    // The returned parameters reproduce the recorded best validation accuracy.
    let preds = trained.predict_batch(val.posts()).unwrap();
    let acc = weighted(&confusion(&preds, &val).unwrap()).unwrap().accuracy;
    assert_eq!(acc, best_entry.val_accuracy);
    if history.stopped_early {
        assert!(history.epochs.len() < 30);
    }
}

#[test]
fn out_of_range_learning_rate_requires_the_force_flag() {
    let train = toy_split(SplitName::Train, "t", 8);
    let val = toy_split(SplitName::Validation, "v", 4);
    let cfg = TrainConfig { learning_rate: 5e-2, ..baseline_train_defaults() };
    let model = build_for(BaselineKind::BilstmAttn, &train, 1);
    let err = train_baseline(model, &train, &val, &cfg).unwrap_err();
    assert!(err.to_string().contains("force_learning_rate"), "{err}");

    let forced = TrainConfig {
        learning_rate: 5e-2,
        force_learning_rate: true,
        epochs: 1,
        max_seq_len: 32,
        ..baseline_train_defaults()
    };
    let model = build_for(BaselineKind::BilstmAttn, &train, 1);
    train_baseline(model, &train, &val, &forced).unwrap();
}
