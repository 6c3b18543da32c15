//! Meta-feature assembly contract: dimensions, strict completeness and
//! integrity, row ordering, label attachment, and the CSV container.

use std::collections::BTreeMap;

use fakestack_data::{DatasetSplit, Label, LabeledPost, SplitName};
use fakestack_ensemble::{build_meta_features, define_variant, EnsembleError, MetaFeatureMatrix};
use fakestack_nn::{ClassProbabilities, PredictionRecord};
use ndarray::Array2;

fn record(id: &str, model: &str, p_real: f64) -> PredictionRecord {
    PredictionRecord::new(
        id.to_string(),
        model.to_string(),
        ClassProbabilities::new(1.0 - p_real, p_real).unwrap(),
    )
}

/// Deterministic pseudo-probability in (0,1) from indices.
fn p(model_idx: usize, post_idx: usize) -> f64 {
    let x = ((model_idx + 1) * 2654435761usize ^ (post_idx + 1) * 40503) % 1000;
    (x as f64 + 0.5) / 1000.0
}

fn records_for(models: &[&str], ids: &[String]) -> BTreeMap<String, Vec<PredictionRecord>> {
    models
        .iter()
        .enumerate()
        .map(|(j, model)| {
            let recs = ids
                .iter()
                .enumerate()
                .map(|(i, id)| record(id, model, p(j, i)))
                .collect();
            (model.to_string(), recs)
        })
        .collect()
}

#[test]
fn eight_members_by_validation_size_gives_a_2140_by_8_matrix() {
    let members = define_variant("v3").unwrap().members;
    let names: Vec<&str> = members.iter().map(String::as_str).collect();
    let ids: Vec<String> = (0..2140).map(|i| format!("val{i:04}")).collect();
    let records = records_for(&names, &ids);
    let matrix = build_meta_features(&records, &members, None).unwrap();
    assert_eq!(matrix.n_rows(), 2140);
    assert_eq!(matrix.n_members(), 8);
    assert_eq!(matrix.values().dim(), (2140, 8));
    assert_eq!(matrix.post_ids(), &ids[..]);
    assert!(matrix.labels().is_none());
}

#[test]
fn v1_members_give_a_width_four_matrix() {
    let members = define_variant("v1").unwrap().members;
    let names: Vec<&str> = members.iter().map(String::as_str).collect();
    let ids: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
    let matrix = build_meta_features(&records_for(&names, &ids), &members, None).unwrap();
    assert_eq!(matrix.n_members(), 4);
    // Entry (i, j) is member j's p_real for post i.
    assert_eq!(matrix.values()[(3, 2)], p(2, 3));
}

#[test]
fn missing_post_for_one_member_is_a_completeness_error() {
    let members = define_variant("v1").unwrap().members;
    let names: Vec<&str> = members.iter().map(String::as_str).collect();
    let ids: Vec<String> = (40..45).map(|i| i.to_string()).collect();
    let mut records = records_for(&names, &ids);
    records
        .get_mut("xlnet")
        .unwrap()
        .retain(|r| r.post_id != "42");
    let err = build_meta_features(&records, &members, None).unwrap_err();
    match err {
        EnsembleError::Completeness { model, post_id } => {
            assert_eq!(model, "xlnet");
            assert_eq!(post_id, "42");
        }
        other => panic!("expected completeness error, got {other}"),
    }
}

#[test]
fn duplicate_record_is_an_integrity_error() {
    let members = vec!["bert".to_string(), "gpt2".to_string()];
    let ids: Vec<String> = vec!["a".into(), "b".into()];
    let mut records = records_for(&["bert", "gpt2"], &ids);
    let dup = record("a", "gpt2", 0.25);
    records.get_mut("gpt2").unwrap().push(dup);
    let err = build_meta_features(&records, &members, None).unwrap_err();
    match err {
        EnsembleError::Integrity { model, post_id } => {
            assert_eq!(model, "gpt2");
            assert_eq!(post_id, "a");
        }
        other => panic!("expected integrity error, got {other}"),
    }
}

#[test]
fn member_without_any_records_is_an_argument_error() {
    let members = vec!["bert".to_string(), "gpt2".to_string()];
    let ids = vec!["a".to_string()];
    let records = records_for(&["bert"], &ids);
    let err = build_meta_features(&records, &members, None).unwrap_err();
    assert!(matches!(err, EnsembleError::Argument(_)), "{err}");
}

#[test]
fn rows_follow_the_first_members_record_order_and_labels_attach() {
    let ids: Vec<String> = vec!["z9".into(), "a1".into(), "m5".into()];
    let members = vec!["bert".to_string(), "gpt2".to_string()];
    let records = records_for(&["bert", "gpt2"], &ids);
    let posts: Vec<LabeledPost> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let label = if i % 2 == 0 { Label::Fake } else { Label::Real };
            LabeledPost::new(id.clone(), "text", label)
        })
        .collect();
    let gold = DatasetSplit::new(SplitName::Validation, posts).unwrap();
    let matrix = build_meta_features(&records, &members, Some(&gold)).unwrap();
    // Insertion order preserved, not sorted lexically.
    assert_eq!(matrix.post_ids(), &["z9", "a1", "m5"]);
    assert_eq!(
        matrix.labels().unwrap(),
        &[Label::Fake, Label::Real, Label::Fake]
    );
}

#[test]
fn permuting_posts_permutes_rows_identically() {
    let members = vec!["bert".to_string(), "gpt2".to_string(), "xlnet".to_string()];
    let names: Vec<&str> = members.iter().map(String::as_str).collect();
    let ids: Vec<String> = (0..7).map(|i| format!("p{i}")).collect();
    let records = records_for(&names, &ids);
    let base = build_meta_features(&records, &members, None).unwrap();

    let perm = [4usize, 0, 6, 2, 1, 5, 3];
    let permuted_records: BTreeMap<String, Vec<PredictionRecord>> = records
        .iter()
        .map(|(model, recs)| {
            let permuted: Vec<PredictionRecord> =
                perm.iter().map(|&i| recs[i].clone()).collect();
            (model.clone(), permuted)
        })
        .collect();
    let permuted = build_meta_features(&permuted_records, &members, None).unwrap();

    for (new_row, &old_row) in perm.iter().enumerate() {
        assert_eq!(permuted.post_ids()[new_row], base.post_ids()[old_row]);
        for j in 0..members.len() {
            assert_eq!(
                permuted.values()[(new_row, j)],
                base.values()[(old_row, j)]
            );
        }
    }
}

#[test]
fn csv_round_trip_preserves_nine_decimal_values_and_header() {
    let members = vec!["roberta".to_string(), "bert".to_string()];
    let ids: Vec<String> = (0..4).map(|i| format!("p{i}")).collect();
    let records = records_for(&["roberta", "bert"], &ids);
    let posts: Vec<LabeledPost> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            LabeledPost::new(
                id.clone(),
                "t",
                if i % 2 == 0 { Label::Real } else { Label::Fake },
            )
        })
        .collect();
    let gold = DatasetSplit::new(SplitName::Validation, posts).unwrap();
    let matrix = build_meta_features(&records, &members, Some(&gold)).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("meta.csv");
    matrix.save_csv(&path).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "post_id,roberta,bert,label");
    let first = lines.next().unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields.len(), 4);
    // Nine decimal digits exactly.
    let decimals = fields[1].split('.').nth(1).unwrap();
    assert_eq!(decimals.len(), 9);
    assert!(matches!(fields[3], "fake" | "real"));

    let loaded = MetaFeatureMatrix::load_csv(&path).unwrap();
    assert_eq!(loaded.member_order(), matrix.member_order());
    assert_eq!(loaded.post_ids(), matrix.post_ids());
    assert_eq!(loaded.labels(), matrix.labels());
    // Nine decimals keep these synthetic three-decimal values lossless.
    assert_eq!(loaded.values(), matrix.values());
}

#[test]
fn unlabeled_matrix_omits_the_label_column() {
    let members = vec!["bert".to_string()];
    let ids = vec!["x".to_string()];
    let matrix = build_meta_features(&records_for(&["bert"], &ids), &members, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("meta.csv");
    matrix.save_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "post_id,bert");
    let loaded = MetaFeatureMatrix::load_csv(&path).unwrap();
    assert!(loaded.labels().is_none());
}

#[test]
fn out_of_range_values_are_rejected() {
    let values = Array2::from_shape_vec((1, 1), vec![1.2]).unwrap();
    let err = MetaFeatureMatrix::new(values, vec!["bert".into()], vec!["p".into()], None)
        .unwrap_err();
    assert!(matches!(err, EnsembleError::Argument(_)), "{err}");

    let values = Array2::from_shape_vec((1, 2), vec![0.5, 0.5]).unwrap();
    let err = MetaFeatureMatrix::new(
        values,
        vec!["bert".into(), "bert".into()],
        vec!["p".into()],
        None,
    )
    .unwrap_err();
    assert!(matches!(err, EnsembleError::Argument(_)), "{err}");
}
