//! Label sets shared by all preference structures and matrices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ItemSetError {
    #[error("item set needs at least 2 labels, got {0}")]
    TooFewItems(usize),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("empty label at position {0}")]
    EmptyLabel(usize),
}

/// An ordered set of distinct, non-empty text labels. Every preference
/// structure and every reciprocal matrix is indexed by one of these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSet {
    labels: Vec<String>,
}

impl ItemSet {
    pub fn new(labels: Vec<String>) -> Result<Self, ItemSetError> {
        if labels.len() < 2 {
            return Err(ItemSetError::TooFewItems(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(ItemSetError::EmptyLabel(i));
            }
            if labels[..i].contains(label) {
                return Err(ItemSetError::DuplicateLabel(label.clone()));
            }
        }
        Ok(ItemSet { labels })
    }

    pub fn from_strs(labels: &[&str]) -> Result<Self, ItemSetError> {
        Self::new(labels.iter().map(|s| s.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_distinct_labels() {
        let s = ItemSet::from_strs(&["a", "b", "c"]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.index_of("b"), Some(1));
        assert_eq!(s.index_of("z"), None);
    }

    #[test]
    fn rejects_duplicates() {
        let err = ItemSet::from_strs(&["a", "b", "a"]).unwrap_err();
        assert_eq!(err, ItemSetError::DuplicateLabel("a".into()));
    }

    #[test]
    fn rejects_singleton_and_empty_label() {
        assert_eq!(
            ItemSet::from_strs(&["a"]).unwrap_err(),
            ItemSetError::TooFewItems(1)
        );
        assert_eq!(
            ItemSet::from_strs(&["a", ""]).unwrap_err(),
            ItemSetError::EmptyLabel(1)
        );
    }
}
