//! Adapter for the external multi-verdict fact-check export.
//!
//! The export rates each claim with a free-form verdict ("false", "mostly
//! true", ...). We collapse those to the binary FAKE/REAL scheme through an
//! auditable mapping table; the default table ships with the crate as a data
//! file and can be replaced at runtime.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use crate::{DataError, DatasetSplit, Label, LabeledPost, Result, SplitName};

/// Default verdict table, embedded at compile time so the adapter works
/// without any side files installed.
const DEFAULT_MAP: &str = include_str!("../data/fakecovid_verdict_map.csv");

/// Case-insensitive mapping from source verdict strings to binary labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictMap {
    entries: BTreeMap<String, Label>,
}

impl VerdictMap {
    /// Loads a mapping from two-column CSV text (`verdict,binary_label`).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if i == 0 {
                // Header row; accept and ignore it.
                continue;
            }
            let (verdict, label) =
                line.split_once(',')
                    .ok_or_else(|| DataError::BadVerdictMap {
                        line: i + 1,
                        message: "expected two comma-separated columns".into(),
                    })?;
            let label = Label::parse(label.trim()).ok_or_else(|| DataError::BadVerdictMap {
                line: i + 1,
                message: format!("unknown binary label {:?}", label.trim()),
            })?;
            entries.insert(verdict.trim().to_lowercase(), label);
        }
        if entries.is_empty() {
            return Err(DataError::BadVerdictMap {
                line: 0,
                message: "mapping file contains no entries".into(),
            });
        }
        Ok(Self { entries })
    }

    /// Loads a mapping from a two-column CSV file.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }

    /// Looks up a verdict; matching is case-insensitive and whitespace-trimmed.
    pub fn lookup(&self, verdict: &str) -> Option<Label> {
        self.entries.get(&verdict.trim().to_lowercase()).copied()
    }

    /// The verdict strings this map knows about, sorted.
    pub fn verdicts(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for VerdictMap {
    fn default() -> Self {
        Self::from_csv_str(DEFAULT_MAP).expect("embedded verdict map is valid")
    }
}

/// Column configuration for the fact-check export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FakeCovidOptions {
    /// Column holding the claim title used as post text.
    pub title_column: String,
    /// Column holding the source verdict.
    pub label_column: String,
    /// Optional column holding a stable record id. When absent, row-number
    /// ids (`fc1`, `fc2`, ...) are synthesized.
    pub id_column: Option<String>,
    /// Verdict-to-binary mapping to apply.
    pub map: VerdictMap,
}

impl Default for FakeCovidOptions {
    fn default() -> Self {
        Self {
            title_column: "source_title".into(),
            label_column: "class".into(),
            id_column: None,
            map: VerdictMap::default(),
        }
    }
}

/// Result of adapting an export file: the binary-labelled split plus
/// bookkeeping about records that had to be dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptOutcome {
    /// The adapted posts, named [`SplitName::External`].
    pub split: DatasetSplit,
    /// Records skipped because their title was empty or whitespace-only.
    pub skipped_empty_title: usize,
}

/// Adapts a fact-check export CSV into a binary-labelled [`DatasetSplit`].
///
/// Every kept record becomes a [`LabeledPost`] whose text is the claim title
/// and whose label comes from collapsing the verdict through `options.map`.
/// Records with empty titles are skipped and counted; verdicts missing from
/// the map abort with an error listing every distinct offender.
pub fn adapt_fakecovid(path: &Path, options: &FakeCovidOptions) -> Result<AdaptOutcome> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;

    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| DataError::MissingColumn {
                name: name.to_string(),
                path: path.display().to_string(),
            })
    };
    let title_idx = find(&options.title_column)?;
    let label_idx = find(&options.label_column)?;
    let id_idx = match &options.id_column {
        Some(name) => Some(find(name)?),
        None => None,
    };

    let mut posts = Vec::new();
    let mut skipped_empty_title = 0usize;
    let mut unmapped: BTreeSet<String> = BTreeSet::new();

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let title = record.get(title_idx).unwrap_or("").trim();
        let verdict = record.get(label_idx).unwrap_or("").trim();

        let label = match options.map.lookup(verdict) {
            Some(label) => label,
            None => {
                unmapped.insert(verdict.to_string());
                continue;
            }
        };
        if title.is_empty() {
            skipped_empty_title += 1;
            continue;
        }
        let id = match id_idx {
            Some(idx) => record.get(idx).unwrap_or("").trim().to_string(),
            None => format!("fc{}", row + 1),
        };
        posts.push(LabeledPost::new(id, title, label));
    }

    if !unmapped.is_empty() {
        return Err(DataError::UnmappedVerdict {
            labels: unmapped.into_iter().collect(),
        });
    }

    Ok(AdaptOutcome {
        split: DatasetSplit::new(SplitName::External, posts)?,
        skipped_empty_title,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_export(rows: &[(&str, &str)]) -> tempfile::NamedTempFile {
        let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(file, "source_title,class").unwrap();
        for (title, verdict) in rows {
            writeln!(file, "\"{title}\",{verdict}").unwrap();
        }
        file.flush().unwrap();
        file
    }

    #[test]
    fn default_map_covers_the_expected_verdicts() {
        let map = VerdictMap::default();
        for verdict in ["false", "partially false", "misleading", "mostly false", "no evidence"] {
            assert_eq!(map.lookup(verdict), Some(Label::Fake), "{verdict}");
        }
        for verdict in ["true", "mostly true", "correct"] {
            assert_eq!(map.lookup(verdict), Some(Label::Real), "{verdict}");
        }
        // Case and padding must not matter.
        assert_eq!(map.lookup("  FALSE "), Some(Label::Fake));
        assert_eq!(map.lookup("unproven"), None);
    }

    #[test]
    fn adapts_titles_and_collapses_verdicts() {
        let file = write_export(&[
            ("claim one", "false"),
            ("claim two", "Mostly True"),
            ("  ", "false"),
            ("claim four", "misleading"),
        ]);
        let outcome = adapt_fakecovid(file.path(), &FakeCovidOptions::default()).unwrap();
        assert_eq!(outcome.skipped_empty_title, 1);
        assert_eq!(outcome.split.len(), 3);
        let posts = outcome.split.posts();
        assert_eq!(posts[0].id, "fc1");
        assert_eq!(posts[0].text, "claim one");
        assert_eq!(posts[0].label, Label::Fake);
        assert_eq!(posts[1].label, Label::Real);
        assert_eq!(posts[2].id, "fc4");
    }

    #[test]
    fn unmapped_verdicts_are_collected_into_one_error() {
        let file = write_export(&[
            ("a", "false"),
            ("b", "unproven"),
            ("c", "satire"),
            ("d", "unproven"),
        ]);
        match adapt_fakecovid(file.path(), &FakeCovidOptions::default()) {
            Err(DataError::UnmappedVerdict { labels }) => {
                assert_eq!(labels, vec!["satire".to_string(), "unproven".to_string()]);
            }
            other => panic!("expected UnmappedVerdict, got {other:?}"),
        }
    }

    #[test]
    fn missing_configured_column_is_reported() {
        let file = write_export(&[("a", "false")]);
        let options = FakeCovidOptions {
            label_column: "verdict".into(),
            ..FakeCovidOptions::default()
        };
        match adapt_fakecovid(file.path(), &options) {
            Err(DataError::MissingColumn { name, .. }) => assert_eq!(name, "verdict"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn custom_map_file_round_trips() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "verdict,binary_label").unwrap();
        writeln!(file, "bogus,fake").unwrap();
        writeln!(file, "legit,real").unwrap();
        file.flush().unwrap();
        let map = VerdictMap::from_csv_path(file.path()).unwrap();
        assert_eq!(map.lookup("BOGUS"), Some(Label::Fake));
        assert_eq!(map.lookup("legit"), Some(Label::Real));
        assert_eq!(map.verdicts().count(), 2);
    }

    #[test]
    fn malformed_map_rows_are_rejected() {
        let err = VerdictMap::from_csv_str("verdict,binary_label\nno-comma-here\n").unwrap_err();
        assert!(matches!(err, DataError::BadVerdictMap { line: 2, .. }));
        let err = VerdictMap::from_csv_str("verdict,binary_label\nx,maybe\n").unwrap_err();
        assert!(matches!(err, DataError::BadVerdictMap { line: 2, .. }));
    }
}
