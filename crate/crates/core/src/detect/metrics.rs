use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{BinaryChangeMap, ChangeScoreMap, Label, LabelMap};

fn check_dims(op: &'static str, h: usize, w: usize, labels: &LabelMap) -> Result<()> {
    if (h, w) != (labels.height, labels.width) {
        return Err(Error::shape(
            op,
            format!("map is {}x{}, labels are {}x{}", h, w, labels.height, labels.width),
        ));
    }
    Ok(())
}

/// Labeled `(score, is_changed)` pairs, unlabeled cells dropped.
fn labeled<T: Scalar>(scores: &ChangeScoreMap<T>, labels: &LabelMap) -> Vec<(f64, bool)> {
    scores
        .scores
        .iter()
        .zip(&labels.labels)
        .filter_map(|(&s, &l)| match l {
            Label::Changed => Some((s.as_f64(), true)),
            Label::Unchanged => Some((s.as_f64(), false)),
            Label::Unlabeled => None,
        })
        .collect()
}

fn both_classes(op: &'static str, pairs: &[(f64, bool)]) -> Result<(usize, usize)> {
    let pos = pairs.iter().filter(|p| p.1).count();
    let neg = pairs.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::contract(
            op,
            format!("need both classes, found {pos} changed and {neg} unchanged pixels"),
        ));
    }
    Ok((pos, neg))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// `(false alarm rate, detection probability)` from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    /// Score threshold of each point (`score >= t` is called changed);
    /// the first is `+inf`.
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

/// Exact ROC curve over every distinct labeled score, with trapezoidal AUC.
pub fn roc_auc<T: Scalar>(scores: &ChangeScoreMap<T>, labels: &LabelMap) -> Result<RocCurve> {
    check_dims("roc_auc", scores.height, scores.width, labels)?;
    let mut pairs = labeled(scores, labels);
    let (pos, neg) = both_classes("roc_auc", &pairs)?;
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        while i < pairs.len() && pairs[i].0.total_cmp(&t) == Ordering::Equal {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(t);
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, thresholds, auc })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn metrics(&self) -> BinaryMetrics {
        let total = self.total() as f64;
        let (tp, tn, fp, fn_) = (self.tp as f64, self.tn as f64, self.fp as f64, self.fn_ as f64);
        let mut degenerate = false;
        let mut ratio = |num: f64, den: f64| {
            if den == 0.0 {
                degenerate = true;
                0.0
            } else {
                num / den
            }
        };
        let oa = ratio(tp + tn, total);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        let pe = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (total * total);
        let kappa = ratio(oa - pe, 1.0 - pe);
        BinaryMetrics { oa, kappa, f1, precision, recall, degenerate }
    }
}

/// Overall accuracy, Cohen's kappa, F1, precision and recall. Any metric with
/// a zero denominator is reported as 0 and sets `degenerate`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryMetrics {
    pub oa: f64,
    pub kappa: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub degenerate: bool,
}

pub fn confusion_counts(pred: &BinaryChangeMap, labels: &LabelMap) -> Result<ConfusionCounts> {
    check_dims("confusion_metrics", pred.height, pred.width, labels)?;
    let mut c = ConfusionCounts::default();
    for (&p, &l) in pred.changed.iter().zip(&labels.labels) {
        match (p, l) {
            (true, Label::Changed) => c.tp += 1,
            (false, Label::Unchanged) => c.tn += 1,
            (true, Label::Unchanged) => c.fp += 1,
            (false, Label::Changed) => c.fn_ += 1,
            (_, Label::Unlabeled) => {}
        }
    }
    if c.total() == 0 {
        return Err(Error::contract("confusion_metrics", "no labeled pixels"));
    }
    Ok(c)
}

pub fn confusion_metrics(pred: &BinaryChangeMap, labels: &LabelMap) -> Result<BinaryMetrics> {
    Ok(confusion_counts(pred, labels)?.metrics())
}

/// Minimum, quartiles and maximum of a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl FiveNumber {
    /// Quartiles interpolate linearly between order statistics at `q * (n - 1)`.
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        FiveNumber { min: v[0], q25: q(0.25), median: q(0.5), q75: q(0.75), max: v[v.len() - 1] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparabilityStats {
    pub change: FiveNumber,
    pub background: FiveNumber,
}

/// Five-number summaries per class after min-max normalizing all labeled
/// scores jointly to [0, 1].
pub fn separability_stats<T: Scalar>(scores: &ChangeScoreMap<T>, labels: &LabelMap) -> Result<SeparabilityStats> {
    check_dims("separability_stats", scores.height, scores.width, labels)?;
    let pairs = labeled(scores, labels);
    both_classes("separability_stats", &pairs)?;
    let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let norm = |s: f64| if hi > lo { (s - lo) / (hi - lo) } else { 0.0 };
    let change: Vec<f64> = pairs.iter().filter(|p| p.1).map(|p| norm(p.0)).collect();
    let background: Vec<f64> = pairs.iter().filter(|p| !p.1).map(|p| norm(p.0)).collect();
    Ok(SeparabilityStats { change: FiveNumber::of(&change), background: FiveNumber::of(&background) })
}
