use crate::detect::ChangeScoreMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pixels presumed unchanged, over which the training loss is averaged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoMask {
    height: usize,
    width: usize,
    selected: Vec<bool>,
    count: usize,
}

impl PseudoMask {
    pub fn new(height: usize, width: usize, selected: Vec<bool>) -> Result<Self> {
        if selected.len() != height * width {
            return Err(Error::shape(
                "pseudo_mask",
                format!("{} cells for a {}x{} mask", selected.len(), height, width),
            ));
        }
        let count = selected.iter().filter(|&&s| s).count();
        if count == 0 {
            return Err(Error::contract("pseudo_mask", "mask selects no pixels"));
        }
        Ok(PseudoMask { height, width, selected, count })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn selected(&self) -> &[bool] {
        &self.selected
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn ratio(&self) -> f64 {
        self.count as f64 / (self.height * self.width) as f64
    }
}

/// Selects the `n` lowest-scoring pixels; equal scores are taken in row-major order.
pub fn build_pseudo_mask<T: Scalar>(scores: &ChangeScoreMap<T>, n: usize) -> Result<PseudoMask> {
    let total = scores.len();
    if n < 1 || n > total {
        return Err(Error::contract(
            "build_pseudo_mask",
            format!("mask size {n} outside 1..={total} for a {}x{} map", scores.height, scores.width),
        ));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| scores.scores[a].partial_cmp(&scores.scores[b]).expect("finite scores").then(a.cmp(&b)));
    let mut selected = vec![false; total];
    for &i in &order[..n] {
        selected[i] = true;
    }
    PseudoMask::new(scores.height, scores.width, selected)
}
