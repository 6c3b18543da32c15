//! Corpus vocabulary with reserved padding/unknown slots. Tokens are ranked
//! by descending frequency (ties broken lexicographically) so the same corpus
//! always produces the same index assignment.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use fakestack_data::DatasetSplit;

use crate::{BaselineError, Result};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Bidirectional token↔index map; indices 0 and 1 are reserved for the
/// padding and unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    index_to_token: Vec<String>,
    token_to_index: HashMap<String, usize>,
    min_freq: usize,
}

impl Vocab {
    fn from_tokens(tokens: Vec<String>, min_freq: usize) -> Result<Self> {
        let mut index_to_token = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        index_to_token.extend(tokens);
        let mut token_to_index = HashMap::with_capacity(index_to_token.len());
        for (i, tok) in index_to_token.iter().enumerate() {
            if token_to_index.insert(tok.clone(), i).is_some() {
                return Err(BaselineError::Argument(format!(
                    "duplicate token {tok:?} breaks the vocabulary bijection"
                )));
            }
        }
        Ok(Self {
            index_to_token,
            token_to_index,
            min_freq,
        })
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the two reserved tokens are always present
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    /// Index for a token, falling back to the unknown slot.
    pub fn index_of(&self, token: &str) -> usize {
        self.token_to_index.get(token).copied().unwrap_or(UNK_INDEX)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    /// Lowercased whitespace tokenization capped at `max_len` ids. Texts with
    /// no tokens map to a single unknown-token id so downstream models always
    /// see at least one step.
    pub fn encode(&self, text: &str, max_len: usize) -> Vec<usize> {
        let ids: Vec<usize> = text
            .split_whitespace()
            .take(max_len.max(1))
            .map(|w| self.index_of(&w.to_lowercase()))
            .collect();
        if ids.is_empty() {
            vec![UNK_INDEX]
        } else {
            ids
        }
    }

    /// Writes the vocabulary as a two-column (token, index) text file with a
    /// comment header recording the frequency threshold.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = format!("# min_freq: {}\n", self.min_freq);
        for (i, tok) in self.index_to_token.iter().enumerate() {
            out.push_str(tok);
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path)?;
        let mut min_freq = 1;
        let mut rows: Vec<(String, usize)> = Vec::new();
        for (lineno, line) in raw.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("min_freq:") {
                    min_freq = v.trim().parse().map_err(|_| {
                        BaselineError::Checkpoint(format!("bad min_freq header {line:?}"))
                    })?;
                }
                continue;
            }
            let (tok, idx) = line.split_once('\t').ok_or_else(|| {
                BaselineError::Checkpoint(format!("line {} is not token<TAB>index", lineno + 1))
            })?;
            let idx: usize = idx.parse().map_err(|_| {
                BaselineError::Checkpoint(format!("line {}: bad index {idx:?}", lineno + 1))
            })?;
            rows.push((tok.to_string(), idx));
        }
        rows.sort_by_key(|(_, i)| *i);
        for (expect, (tok, idx)) in rows.iter().enumerate() {
            if *idx != expect {
                return Err(BaselineError::Checkpoint(format!(
                    "vocabulary indices are not contiguous at {tok:?} (got {idx}, want {expect})"
                )));
            }
        }
        if rows.len() < 2 || rows[0].0 != PAD_TOKEN || rows[1].0 != UNK_TOKEN {
            return Err(BaselineError::Checkpoint(
                "vocabulary file must start with the reserved <pad>/<unk> rows".into(),
            ));
        }
        Self::from_tokens(rows.into_iter().skip(2).map(|(t, _)| t).collect(), min_freq)
    }
}

/// Counts lowercased whitespace tokens over the split and keeps those with
/// frequency ≥ `min_freq`, ordered by descending frequency then token text.
pub fn build_vocab(split: &DatasetSplit, min_freq: usize) -> Result<Vocab> {
    if split.is_empty() {
        return Err(BaselineError::Argument(
            "cannot build a vocabulary from an empty split".into(),
        ));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for post in split.posts() {
        for word in post.text.split_whitespace() {
            let word = word.to_lowercase();
            if word == PAD_TOKEN || word == UNK_TOKEN {
                continue; // reserved spellings never enter the counted region
            }
            *counts.entry(word).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_freq)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t).collect(), min_freq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fakestack_data::{DatasetSplit, Label, LabeledPost, SplitName};

    fn corpus(texts: &[&str]) -> DatasetSplit {
        let posts: Vec<LabeledPost> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| LabeledPost::new(format!("p{i}"), (*t).to_string(), Label::Real))
            .collect();
        DatasetSplit::new(SplitName::Train, posts).unwrap()
    }

    #[test]
    fn min_freq_two_keeps_only_the_repeated_token() {
        let vocab = build_vocab(&corpus(&["a a b", "a c"]), 2).unwrap();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.token(0), Some(PAD_TOKEN));
        assert_eq!(vocab.token(1), Some(UNK_TOKEN));
        assert_eq!(vocab.token(2), Some("a"));
        assert_eq!(vocab.index_of("b"), UNK_INDEX);
    }

    #[test]
    fn min_freq_one_keeps_everything_frequency_then_lexicographic() {
        let vocab = build_vocab(&corpus(&["a a b", "a c"]), 1).unwrap();
        assert_eq!(vocab.len(), 5);
        // a has frequency 3; b and c tie at 1 and fall back to text order.
        assert_eq!(vocab.token(2), Some("a"));
        assert_eq!(vocab.token(3), Some("b"));
        assert_eq!(vocab.token(4), Some("c"));
    }

    #[test]
    fn building_twice_gives_identical_vocabularies() {
        let split = corpus(&["x y z", "z y", "q"]);
        assert_eq!(build_vocab(&split, 1).unwrap(), build_vocab(&split, 1).unwrap());
    }

    #[test]
    fn encode_lowercases_truncates_and_never_returns_empty() {
        let vocab = build_vocab(&corpus(&["alpha beta gamma"]), 1).unwrap();
        let ids = vocab.encode("ALPHA beta unknownword", 16);
        assert_eq!(ids.len(), 3);
        assert_eq!(ids[0], vocab.index_of("alpha"));
        assert_eq!(ids[2], UNK_INDEX);
        assert_eq!(vocab.encode("", 16), vec![UNK_INDEX]);
        assert_eq!(vocab.encode("alpha beta gamma", 2).len(), 2);
    }

    #[test]
    fn vocabulary_round_trips_through_the_two_column_file() {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("vocab.tsv");
        let vocab = build_vocab(&corpus(&["a a b", "a c"]), 2).unwrap();
        vocab.save(&path).unwrap();
        let reloaded = Vocab::load(&path).unwrap();
        assert_eq!(vocab, reloaded);
        assert_eq!(reloaded.min_freq(), 2);
    }
}
