use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{DataError, Result};

/// Binary gold label. Index convention: FAKE = 0, REAL = 1, and probability
/// vectors are always ordered (p_fake, p_real).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Fake,
    Real,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Fake => 0,
            Label::Real => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::Fake),
            1 => Some(Label::Real),
            _ => None,
        }
    }

    /// Case-insensitive parse after trimming, as used by the split loaders.
    pub fn parse(raw: &str) -> Option<Label> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "fake" => Some(Label::Fake),
            "real" => Some(Label::Real),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fake => "fake",
            Label::Real => "real",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One social-media post with identity, text and gold label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPost {
    pub id: String,
    pub text: String,
    pub label: Label,
}

impl LabeledPost {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label,
        }
    }
}

/// Which named split a collection of posts belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
    External,
    Custom,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
            SplitName::External => "external",
            SplitName::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// An ordered, id-unique collection of labeled posts. Load order is preserved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    name: SplitName,
    posts: Vec<LabeledPost>,
}

impl DatasetSplit {
    /// Builds a split, enforcing pairwise-distinct ids and non-empty text.
    pub fn new(name: SplitName, posts: Vec<LabeledPost>) -> Result<Self> {
        let mut seen: HashSet<&str> = HashSet::with_capacity(posts.len());
        for (row, post) in posts.iter().enumerate() {
            if post.text.trim().is_empty() {
                return Err(DataError::EmptyText { row: row + 1 });
            }
            if !seen.insert(post.id.as_str()) {
                return Err(DataError::DuplicateId {
                    id: post.id.clone(),
                    row: row + 1,
                });
            }
        }
        Ok(Self { name, posts })
    }

    pub fn empty(name: SplitName) -> Self {
        Self {
            name,
            posts: Vec::new(),
        }
    }

    pub fn name(&self) -> SplitName {
        self.name
    }

    pub fn posts(&self) -> &[LabeledPost] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledPost> {
        self.posts.iter()
    }

    /// Ids in load order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.posts.iter().map(|p| p.id.as_str())
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.posts.iter().any(|p| p.id == id)
    }

    /// True when the two splits share at least one id.
    pub fn overlaps(&self, other: &DatasetSplit) -> bool {
        let ids: HashSet<&str> = self.ids().collect();
        other.ids().any(|id| ids.contains(id))
    }

    /// Returns the same posts under a different split name.
    pub fn renamed(mut self, name: SplitName) -> Self {
        self.name = name;
        self
    }

    /// Applies a text transformation to every post, keeping ids and labels.
    pub fn map_text(&self, mut f: impl FnMut(&str) -> String) -> Result<Self> {
        let posts = self
            .posts
            .iter()
            .map(|p| LabeledPost::new(p.id.clone(), f(&p.text), p.label))
            .collect();
        Self::new(self.name, posts)
    }

    /// Selects a subset of posts by positional index, preserving order.
    pub fn select(&self, indices: &[usize], name: SplitName) -> Result<Self> {
        let posts = indices.iter().map(|&i| self.posts[i].clone()).collect();
        Self::new(name, posts)
    }
}

impl<'a> IntoIterator for &'a DatasetSplit {
    type Item = &'a LabeledPost;
    type IntoIter = std::slice::Iter<'a, LabeledPost>;

    fn into_iter(self) -> Self::IntoIter {
        self.posts.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_parse_is_case_insensitive() {
        assert_eq!(Label::parse(" ReAl "), Some(Label::Real));
        assert_eq!(Label::parse("FAKE"), Some(Label::Fake));
        assert_eq!(Label::parse("maybe"), None);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let posts = vec![
            LabeledPost::new("17", "a", Label::Fake),
            LabeledPost::new("17", "b", Label::Real),
        ];
        let err = DatasetSplit::new(SplitName::Train, posts).unwrap_err();
        match err {
            DataError::DuplicateId { id, .. } => assert_eq!(id, "17"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_text_is_rejected() {
        let posts = vec![LabeledPost::new("1", "   ", Label::Fake)];
        assert!(matches!(
            DatasetSplit::new(SplitName::Train, posts),
            Err(DataError::EmptyText { row: 1 })
        ));
    }
}
