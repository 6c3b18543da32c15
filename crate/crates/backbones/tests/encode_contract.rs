//! Contract tests for the weights provider and batch encoding: proxy
//! materialization is deterministic, embeddings are finite with the right
//! shape, batch composition never changes a post's embedding, and base-size
//! weights that are not staged locally fail with an availability error.

use fakestack_backbones::{
    encode_batch, load_pretrained, registry, registry_with, BackboneError, BackboneId,
    BackboneName, FsProvider, Pooling, SizeClass, WeightsProvider,
};
use tempfile::TempDir;

fn proxy_provider(dir: &TempDir) -> FsProvider {
    FsProvider::new(Some(dir.path().to_path_buf()), true).unwrap()
}

#[test]
fn registry_lists_the_eight_families_in_order() {
    let ids = registry();
    assert_eq!(ids.len(), 8);
    assert_eq!(ids[3].name, BackboneName::Roberta);
    let names: Vec<&str> = ids.iter().map(|id| id.name.as_str()).collect();
    assert_eq!(
        names,
        [
            "bert",
            "gpt2",
            "xlnet",
            "roberta",
            "distilroberta",
            "albert",
            "bart",
            "deberta"
        ]
    );
    assert!(ids.iter().all(|id| id.size_class == SizeClass::Base));
}

#[test]
fn proxy_fetch_is_deterministic_and_cached() {
    let dir = TempDir::new().unwrap();
    let provider = proxy_provider(&dir);
    let id = BackboneId::small_proxy(BackboneName::Roberta);
    let first = provider.fetch(&id).unwrap();
    // Second fetch reads the materialized checkpoint back from disk.
    let second = provider.fetch(&id).unwrap();
    assert_eq!(first.encoder.fingerprint(), second.encoder.fingerprint());
    assert_eq!(first.tokenizer, second.tokenizer);
    assert!(dir.path().join(id.to_string()).join("manifest.json").exists());
}

#[test]
fn every_family_has_a_proxy_and_distinct_weights() {
    let dir = TempDir::new().unwrap();
    let provider = proxy_provider(&dir);
    let mut fingerprints = Vec::new();
    for id in registry_with(SizeClass::SmallProxy) {
        let pb = provider.fetch(&id).unwrap();
        fingerprints.push(pb.encoder.fingerprint());
    }
    assert_eq!(fingerprints.len(), 8);
    for i in 0..8 {
        for j in i + 1..8 {
            assert_ne!(fingerprints[i], fingerprints[j], "families {i} and {j}");
        }
    }
}

#[test]
fn encode_batch_returns_one_finite_row_per_text() {
    let dir = TempDir::new().unwrap();
    let provider = proxy_provider(&dir);
    let pb = provider
        .fetch(&BackboneId::small_proxy(BackboneName::Bert))
        .unwrap();
    let texts = [
        "masks reduce transmission of the virus",
        "drinking bleach cures covid in one day",
        "vaccines were tested in large trials",
    ];
    let (features, diag) = encode_batch(&pb, &texts, 64, Pooling::FirstToken).unwrap();
    assert_eq!(features.shape(), [3, pb.hidden_width()]);
    assert!(features.iter().all(|v| v.is_finite()));
    assert!(diag.empty_text_indices.is_empty());
}

#[test]
fn identical_texts_encode_to_identical_rows() {
    let dir = TempDir::new().unwrap();
    let provider = proxy_provider(&dir);
    let pb = provider
        .fetch(&BackboneId::small_proxy(BackboneName::Albert))
        .unwrap();
    let texts = ["same words here", "completely different and much longer text with many words", "same words here"];
    let (features, _) = encode_batch(&pb, &texts, 64, Pooling::Mean).unwrap();
    for j in 0..features.ncols() {
        assert_eq!(features[(0, j)], features[(2, j)]);
    }
}

#[test]
fn batch_composition_does_not_change_an_embedding() {
    // The same post encoded alone and padded next to a longer neighbour must
    // produce bit-identical features: padding is fully masked out.
    let dir = TempDir::new().unwrap();
    let provider = proxy_provider(&dir);
    let pb = provider
        .fetch(&BackboneId::small_proxy(BackboneName::Deberta))
        .unwrap();
    let alone = ["short claim about masks"];
    let batched = [
        "short claim about masks",
        "a very long post that forces the batch to pad the shorter one with many extra tokens",
    ];
    for pooling in [Pooling::FirstToken, Pooling::LastToken, Pooling::Mean] {
        let (solo, _) = encode_batch(&pb, &alone, 64, pooling).unwrap();
        let (pair, _) = encode_batch(&pb, &batched, 64, pooling).unwrap();
        for j in 0..solo.ncols() {
            assert_eq!(solo[(0, j)], pair[(0, j)], "{pooling:?} column {j}");
        }
    }
}

#[test]
fn empty_texts_are_flagged_but_still_encoded() {
    let dir = TempDir::new().unwrap();
    let provider = proxy_provider(&dir);
    let pb = provider
        .fetch(&BackboneId::small_proxy(BackboneName::Gpt2))
        .unwrap();
    let texts = ["real words", "", "   "];
    let (features, diag) = encode_batch(&pb, &texts, 32, Pooling::LastToken).unwrap();
    assert_eq!(features.nrows(), 3);
    assert!(features.iter().all(|v| v.is_finite()));
    assert_eq!(diag.empty_text_indices, vec![1, 2]);
}

#[test]
fn base_weights_missing_from_the_cache_is_an_availability_error() {
    let dir = TempDir::new().unwrap();
    let provider = proxy_provider(&dir);
    let err = provider
        .fetch(&BackboneId::base(BackboneName::Roberta))
        .unwrap_err();
    match err {
        BackboneError::Availability { backbone, reason } => {
            assert!(backbone.contains("roberta"), "{backbone}");
            assert!(!reason.is_empty());
        }
        other => panic!("expected availability error, got {other:?}"),
    }
}

#[test]
fn pretrained_checkpoints_round_trip_from_disk() {
    let dir = TempDir::new().unwrap();
    let provider = proxy_provider(&dir);
    let id = BackboneId::small_proxy(BackboneName::Xlnet);
    let pb = provider.fetch(&id).unwrap();
    let reloaded = load_pretrained(&dir.path().join(id.to_string())).unwrap();
    assert_eq!(pb.encoder, reloaded.encoder);
    assert_eq!(pb.tokenizer, reloaded.tokenizer);
}
