use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{DataError, DatasetSplit, Label, LabeledPost, Result, SplitName};

/// How to interpret the input file. `Auto` picks TSV for `.tsv`/`.tab`
/// extensions and CSV otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatHint {
    Csv,
    Tsv,
    Auto,
}

fn delimiter_for(path: &Path, hint: FormatHint) -> u8 {
    match hint {
        FormatHint::Csv => b',',
        FormatHint::Tsv => b'\t',
        FormatHint::Auto => match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") || ext.eq_ignore_ascii_case("tab") => {
                b'\t'
            }
            _ => b',',
        },
    }
}

/// Loads a competition-format split: header `id,tweet,label` (case-insensitive,
/// any column order), labels `real|fake` (case-insensitive), RFC-4180 quoting.
/// Row order is preserved.
pub fn load_split(path: &Path, hint: FormatHint, name: SplitName) -> Result<DatasetSplit> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path, hint))
        .has_headers(true)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let mut id_col = None;
    let mut tweet_col = None;
    let mut label_col = None;
    let mut extra = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        match h.trim().to_ascii_lowercase().as_str() {
            "id" => id_col = Some(i),
            "tweet" => tweet_col = Some(i),
            "label" => label_col = Some(i),
            other => extra.push(other.to_string()),
        }
    }
    let mut missing = Vec::new();
    if id_col.is_none() {
        missing.push("id".to_string());
    }
    if tweet_col.is_none() {
        missing.push("tweet".to_string());
    }
    if label_col.is_none() {
        missing.push("label".to_string());
    }
    if !missing.is_empty() || !extra.is_empty() {
        return Err(DataError::Schema {
            path: path.display().to_string(),
            missing,
            extra,
        });
    }
    let (id_col, tweet_col, label_col) =
        (id_col.unwrap(), tweet_col.unwrap(), label_col.unwrap());

    let mut posts = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1; // 1-based data row, matching error messages
        let id = record.get(id_col).unwrap_or("").trim().to_string();
        let text = record.get(tweet_col).unwrap_or("").to_string();
        let raw_label = record.get(label_col).unwrap_or("");
        let label = Label::parse(raw_label).ok_or_else(|| DataError::UnknownLabel {
            row,
            value: raw_label.to_string(),
        })?;
        if text.trim().is_empty() {
            return Err(DataError::EmptyText { row });
        }
        posts.push(LabeledPost::new(id, text, label));
    }
    DatasetSplit::new(name, posts)
}

/// Writes a split back out in the canonical `id,tweet,label` layout.
/// Reloading the result yields an identical split field-by-field.
pub fn save_split(split: &DatasetSplit, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = File::create(path)?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    writer.write_record(["id", "tweet", "label"])?;
    for post in split {
        writer.write_record([post.id.as_str(), post.text.as_str(), post.label.as_str()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes arbitrary rows as CSV; used by fixtures and the synthetic generator.
pub(crate) fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = File::create(path)?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    let mut inner = writer.into_inner().map_err(|e| {
        std::io::Error::new(std::io::ErrorKind::Other, format!("csv flush: {e}"))
    })?;
    inner.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_basic_csv_preserving_order() {
        let f = write_tmp("id,tweet,label\n1,hello world,real\n2,\"a, quoted\ntweet\",fake\n");
        let split = load_split(f.path(), FormatHint::Auto, SplitName::Train).unwrap();
        assert_eq!(split.len(), 2);
        assert_eq!(split.posts()[0].id, "1");
        assert_eq!(split.posts()[1].text, "a, quoted\ntweet");
        assert_eq!(split.posts()[1].label, Label::Fake);
    }

    #[test]
    fn header_only_file_is_an_empty_split() {
        let f = write_tmp("id,tweet,label\n");
        let split = load_split(f.path(), FormatHint::Auto, SplitName::Train).unwrap();
        assert!(split.is_empty());
    }

    #[test]
    fn header_is_case_insensitive_and_order_free() {
        let f = write_tmp("Label,ID,Tweet\nreal,9,some text\n");
        let split = load_split(f.path(), FormatHint::Auto, SplitName::Test).unwrap();
        assert_eq!(split.posts()[0].id, "9");
        assert_eq!(split.posts()[0].label, Label::Real);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let f = write_tmp("id,text,label\n1,hello,real\n");
        match load_split(f.path(), FormatHint::Auto, SplitName::Train) {
            Err(DataError::Schema { missing, extra, .. }) => {
                assert_eq!(missing, vec!["tweet".to_string()]);
                assert_eq!(extra, vec!["text".to_string()]);
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_reports_the_offender() {
        let f = write_tmp("id,tweet,label\n17,a,real\n17,b,fake\n");
        match load_split(f.path(), FormatHint::Auto, SplitName::Train) {
            Err(DataError::DuplicateId { id, row }) => {
                assert_eq!(id, "17");
                assert_eq!(row, 2);
            }
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_reports_row_number() {
        let f = write_tmp("id,tweet,label\n1,a,real\n2,b,bogus\n");
        match load_split(f.path(), FormatHint::Auto, SplitName::Train) {
            Err(DataError::UnknownLabel { row, value }) => {
                assert_eq!(row, 2);
                assert_eq!(value, "bogus");
            }
            other => panic!("expected label error, got {other:?}"),
        }
    }

    #[test]
    fn tsv_hint_and_extension_are_honored() {
        let mut f = tempfile::Builder::new().suffix(".tsv").tempfile().unwrap();
        f.write_all(b"id\ttweet\tlabel\n1\thello there\treal\n")
            .unwrap();
        let split = load_split(f.path(), FormatHint::Auto, SplitName::Train).unwrap();
        assert_eq!(split.posts()[0].text, "hello there");
    }

    #[test]
    fn round_trip_is_identical() {
        let f = write_tmp("id,tweet,label\n1,\"comma, and \"\"quote\"\"\",real\n2,plain,fake\n");
        let split = load_split(f.path(), FormatHint::Auto, SplitName::Validation).unwrap();
        let out = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        save_split(&split, out.path()).unwrap();
        let reloaded = load_split(out.path(), FormatHint::Auto, SplitName::Validation).unwrap();
        assert_eq!(split, reloaded);
    }
}
