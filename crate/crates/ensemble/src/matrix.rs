//! The stacked-generalization feature matrix: one row per post, one column
//! per member model, each entry the member's probability that the post is
//! real. Assembly is strict — the member set is positional, so a missing or
//! duplicated prediction is a hard error, never imputed.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ndarray::Array2;

use fakestack_data::{DatasetSplit, Label};
use fakestack_nn::PredictionRecord;

use crate::{EnsembleError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MetaFeatureMatrix {
    values: Array2<f64>,
    member_order: Vec<String>,
    post_ids: Vec<String>,
    labels: Option<Vec<Label>>,
}

impl MetaFeatureMatrix {
    /// Validates the matrix invariants: entries in [0,1], unique members,
    /// matching dimensions, and labels (when present) matching row count.
    pub fn new(
        values: Array2<f64>,
        member_order: Vec<String>,
        post_ids: Vec<String>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        if member_order.is_empty() {
            return Err(EnsembleError::Argument(
                "member_order must not be empty".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &member_order {
            if !seen.insert(m.as_str()) {
                return Err(EnsembleError::Argument(format!(
                    "duplicate member {m:?} in member_order"
                )));
            }
        }
        if values.ncols() != member_order.len() {
            return Err(EnsembleError::Argument(format!(
                "matrix has {} columns but {} members",
                values.ncols(),
                member_order.len()
            )));
        }
        if values.nrows() != post_ids.len() {
            return Err(EnsembleError::Argument(format!(
                "matrix has {} rows but {} post ids",
                values.nrows(),
                post_ids.len()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != post_ids.len() {
                return Err(EnsembleError::Argument(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    post_ids.len()
                )));
            }
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(EnsembleError::Argument(format!(
                "meta-feature value {bad} outside [0,1]"
            )));
        }
        Ok(Self {
            values,
            member_order,
            post_ids,
            labels,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn member_order(&self) -> &[String] {
        &self.member_order
    }

    pub fn post_ids(&self) -> &[String] {
        &self.post_ids
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_members(&self) -> usize {
        self.values.ncols()
    }

    /// Writes the matrix as CSV: `post_id,<member names...>[,label]` with
    /// nine decimal digits per value.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = vec!["post_id".into()];
        header.extend(self.member_order.iter().cloned());
        if self.labels.is_some() {
            header.push("label".into());
        }
        writer.write_record(&header)?;
        for (i, id) in self.post_ids.iter().enumerate() {
            let mut record: Vec<String> = vec![id.clone()];
            for j in 0..self.n_members() {
                record.push(format!("{:.9}", self.values[(i, j)]));
            }
            if let Some(labels) = &self.labels {
                record.push(labels[i].as_str().to_string());
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let header = reader.headers()?.clone();
        let mut columns: Vec<String> = header.iter().map(String::from).collect();
        if columns.first().map(String::as_str) != Some("post_id") {
            return Err(EnsembleError::Argument(format!(
                "meta CSV must start with a post_id column, found {:?}",
                columns.first()
            )));
        }
        columns.remove(0);
        let has_labels = columns.last().map(String::as_str) == Some("label");
        if has_labels {
            columns.pop();
        }
        let member_order = columns;
        let mut post_ids = Vec::new();
        let mut labels = if has_labels { Some(Vec::new()) } else { None };
        let mut flat: Vec<f64> = Vec::new();
        for row in reader.records() {
            let row = row?;
            let expected = 1 + member_order.len() + usize::from(has_labels);
            if row.len() != expected {
                return Err(EnsembleError::Argument(format!(
                    "meta CSV row has {} fields, expected {expected}",
                    row.len()
                )));
            }
            post_ids.push(row[0].to_string());
            for j in 0..member_order.len() {
                let raw = &row[1 + j];
                let v: f64 = raw.parse().map_err(|_| {
                    EnsembleError::Argument(format!("unparseable meta value {raw:?}"))
                })?;
                flat.push(v);
            }
            if let Some(labels) = labels.as_mut() {
                let raw = &row[1 + member_order.len()];
                let label = Label::parse(raw).ok_or_else(|| {
                    EnsembleError::Argument(format!("unparseable label {raw:?}"))
                })?;
                labels.push(label);
            }
        }
        let values = Array2::from_shape_vec((post_ids.len(), member_order.len()), flat)
            .expect("row-major construction");
        Self::new(values, member_order, post_ids, labels)
    }
}

/// Assembles the meta-feature matrix from per-member prediction lists.
///
/// The first member's record order defines the row basis; every other member
/// must cover exactly those posts. Entry (i, j) is member j's probability
/// that post i is real. Gold labels are attached when a split is supplied.
pub fn build_meta_features(
    records_by_model: &BTreeMap<String, Vec<PredictionRecord>>,
    member_order: &[String],
    gold: Option<&DatasetSplit>,
) -> Result<MetaFeatureMatrix> {
    if member_order.is_empty() {
        return Err(EnsembleError::Argument(
            "member_order must not be empty".into(),
        ));
    }
    for member in member_order {
        if !records_by_model.contains_key(member) {
            return Err(EnsembleError::Argument(format!(
                "no predictions supplied for member {member:?}"
            )));
        }
    }

    // Index each member's records, rejecting duplicates outright.
    let mut by_member: Vec<HashMap<&str, f64>> = Vec::with_capacity(member_order.len());
    for member in member_order {
        let records = &records_by_model[member];
        let mut index = HashMap::with_capacity(records.len());
        for r in records {
            if index.insert(r.post_id.as_str(), r.probs.p_real).is_some() {
                return Err(EnsembleError::Integrity {
                    model: member.clone(),
                    post_id: r.post_id.clone(),
                });
            }
        }
        by_member.push(index);
    }

    let basis: Vec<String> = records_by_model[&member_order[0]]
        .iter()
        .map(|r| r.post_id.clone())
        .collect();

    let mut values = Array2::zeros((basis.len(), member_order.len()));
    for (i, id) in basis.iter().enumerate() {
        for (j, member) in member_order.iter().enumerate() {
            match by_member[j].get(id.as_str()) {
                Some(&p_real) => values[(i, j)] = p_real,
                None => {
                    return Err(EnsembleError::Completeness {
                        model: member.clone(),
                        post_id: id.clone(),
                    })
                }
            }
        }
    }

    let labels = match gold {
        None => None,
        Some(split) => {
            let by_id: HashMap<&str, Label> = split
                .posts()
                .iter()
                .map(|p| (p.id.as_str(), p.label))
                .collect();
            let mut labels = Vec::with_capacity(basis.len());
            for id in &basis {
                match by_id.get(id.as_str()) {
                    Some(&label) => labels.push(label),
                    None => {
                        return Err(EnsembleError::Argument(format!(
                            "gold split has no label for post {id:?}"
                        )))
                    }
                }
            }
            Some(labels)
        }
    };

    MetaFeatureMatrix::new(values, member_order.to_vec(), basis, labels)
}
