//! Architecture-construction contract: configured bank/filter layouts,
//! attention-weight invariants, probability validity, and the max-pool
//! monotonicity property of the convolutional kinds.

use fakestack_baselines::{
    build_baseline, build_vocab, BaselineConfig, BaselineError, BaselineKind, Vocab,
    ALL_BASELINE_KINDS,
};
use fakestack_data::{DatasetSplit, Label, LabeledPost, SplitName};
use proptest::prelude::*;

fn corpus_vocab() -> Vocab {
    let posts = vec![
        LabeledPost::new(
            "c0",
            "vaccine trial data released today. experts respond quickly!",
            Label::Real,
        ),
        LabeledPost::new(
            "c1",
            "miracle cure hidden by doctors? share before deleted",
            Label::Fake,
        ),
        LabeledPost::new("c2", "masks reduce transmission in crowded rooms", Label::Real),
    ];
    let split = DatasetSplit::new(SplitName::Train, posts).unwrap();
    build_vocab(&split, 1).unwrap()
}

fn small_config(kind: BaselineKind) -> BaselineConfig {
    let (filters, filter_sizes) = if kind.convolutional() {
        (Some(4), Some(vec![1, 2, 3]))
    } else {
        (None, None)
    };
    BaselineConfig {
        kind,
        embedding_dim: 8,
        hidden_units: 6,
        filters,
        filter_sizes,
        dropout: 0.3,
    }
}

#[test]
fn cnn_default_configuration_builds_six_banks_of_256_filters() {
    let cfg = BaselineConfig::default_for(BaselineKind::Cnn1d);
    let model = build_baseline(&cfg, corpus_vocab(), 3).unwrap();
    let shapes = model.tensor_shapes();
    let banks: Vec<_> = shapes
        .iter()
        .filter(|(name, _)| name.starts_with("bank") && name.ends_with(".weight"))
        .collect();
    assert_eq!(banks.len(), 6);
    for (width, (name, shape)) in (1..=6).zip(&banks) {
        assert!(name.contains(&format!("_w{width}.")), "{name}");
        assert_eq!(shape, &vec![width * 300, 256]);
    }
}

#[test]
fn attention_weights_are_a_distribution_over_unpadded_tokens() {
    let vocab = corpus_vocab();
    let text = "vaccine trial data released today experts respond";
    let n_tokens = 7;
    for kind in [BaselineKind::BilstmAttn, BaselineKind::Amcnn] {
        let model = build_baseline(&small_config(kind), vocab.clone(), 5).unwrap();
        let weights = model.attention_weights(text).unwrap().unwrap();
        assert_eq!(weights.len(), n_tokens, "{kind:?}");
        assert!(weights.iter().all(|&w| w >= 0.0), "{kind:?}");
        let sum: f64 = weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6, "{kind:?}: sum {sum}");
    }
}

#[test]
fn hierarchical_attention_runs_over_sentences() {
    let vocab = corpus_vocab();
    let model = build_baseline(&small_config(BaselineKind::Han), vocab, 5).unwrap();
    let weights = model
        .attention_weights("vaccine trial data. experts respond quickly! masks reduce transmission")
        .unwrap()
        .unwrap();
    assert_eq!(weights.len(), 3);
    let sum: f64 = weights.iter().sum();
    assert!((sum - 1.0).abs() < 1e-6);

    let single = model.attention_weights("no sentence punctuation here").unwrap().unwrap();
    assert_eq!(single.len(), 1);
    assert!((single[0] - 1.0).abs() < 1e-9);
}

#[test]
fn kinds_without_attention_return_none() {
    let vocab = corpus_vocab();
    for kind in [BaselineKind::Cnn1d, BaselineKind::Rcnn] {
        let model = build_baseline(&small_config(kind), vocab.clone(), 5).unwrap();
        assert!(model.attention_weights("any text").unwrap().is_none(), "{kind:?}");
    }
}

#[test]
fn convolutional_config_without_filter_sizes_is_rejected() {
    let mut cfg = BaselineConfig::default_for(BaselineKind::Cnn1d);
    cfg.filter_sizes = None;
    let err = build_baseline(&cfg, corpus_vocab(), 0).unwrap_err();
    assert!(matches!(err, BaselineError::Argument(_)), "{err}");
}

#[test]
fn every_kind_emits_valid_two_class_probabilities() {
    let vocab = corpus_vocab();
    for kind in ALL_BASELINE_KINDS {
        let model = build_baseline(&small_config(kind), vocab.clone(), 11).unwrap();
        let probs = model
            .predict_texts(&["vaccine trial data", "miracle cure hidden. share now!"])
            .unwrap();
        assert_eq!(probs.len(), 2, "{kind:?}");
        for p in probs {
            assert!(p.p_fake >= 0.0 && p.p_real >= 0.0, "{kind:?}");
            assert!((p.p_fake + p.p_real - 1.0).abs() < 1e-9, "{kind:?}");
        }
    }
}

#[test]
fn same_seed_builds_identical_models_and_different_seeds_differ() {
    let vocab = corpus_vocab();
    let cfg = small_config(BaselineKind::BilstmAttn);
    let a = build_baseline(&cfg, vocab.clone(), 21).unwrap();
    let b = build_baseline(&cfg, vocab.clone(), 21).unwrap();
    let c = build_baseline(&cfg, vocab, 22).unwrap();
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_ne!(a.fingerprint(), c.fingerprint());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    /// Repeating a post's tokens adds candidate windows without removing
    /// any, so no globally max-pooled feature may decrease.
    #[test]
    fn duplicating_tokens_never_decreases_pooled_features(
        tokens in proptest::collection::vec(0usize..8, 3..12),
        reps in 2usize..4,
    ) {
        let words = ["masks", "reduce", "transmission", "vaccine", "trial",
                     "data", "experts", "respond"];
        let base: Vec<&str> = tokens.iter().map(|&i| words[i]).collect();
        let text = base.join(" ");
        let repeated = vec![text.clone(); reps].join(" ");

        let mut cfg = small_config(BaselineKind::Cnn1d);
        cfg.filter_sizes = Some(vec![1, 2, 3]);
        let model = build_baseline(&cfg, corpus_vocab(), 31).unwrap();
        let short = model.pooled_features(&text).unwrap().unwrap();
        let long = model.pooled_features(&repeated).unwrap().unwrap();
        prop_assert_eq!(short.len(), long.len());
        for (f, (&s, &l)) in short.iter().zip(&long).enumerate() {
            prop_assert!(l >= s - 1e-12, "feature {f} dropped: {s} -> {l}");
        }
    }
}
