use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-pixel change scores, higher meaning more likely changed.
#[derive(Clone, Debug, PartialEq)]
pub struct ChangeScoreMap<T> {
    pub height: usize,
    pub width: usize,
    pub scores: Vec<T>,
}

impl<T: Scalar> ChangeScoreMap<T> {
    pub fn new(height: usize, width: usize, scores: Vec<T>) -> Result<Self> {
        if scores.len() != height * width {
            return Err(Error::shape(
                "score map",
                format!("{}x{} map with {} scores", height, width, scores.len()),
            ));
        }
        Ok(ChangeScoreMap { height, width, scores })
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.scores[row * self.width + col]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryChangeMap {
    pub height: usize,
    pub width: usize,
    pub changed: Vec<bool>,
}

impl BinaryChangeMap {
    pub fn changed_count(&self) -> usize {
        self.changed.iter().filter(|&&c| c).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Unchanged,
    Changed,
    Unlabeled,
}

/// Reference labels; evaluation skips [`Label::Unlabeled`] cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<Label>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::shape(
                "label map",
                format!("{}x{} map with {} labels", height, width, labels.len()),
            ));
        }
        Ok(LabelMap { height, width, labels })
    }

    pub fn filled(height: usize, width: usize, label: Label) -> Self {
        LabelMap { height, width, labels: vec![label; height * width] }
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn from_binary(map: &BinaryChangeMap) -> Self {
        let labels = map
            .changed
            .iter()
            .map(|&c| if c { Label::Changed } else { Label::Unchanged })
            .collect();
        LabelMap { height: map.height, width: map.width, labels }
    }
}
