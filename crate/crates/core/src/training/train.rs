use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{total_loss, LossKind, PseudoMask};
use crate::autograd::Mode;
use crate::error::{Error, Result};
use crate::io::HsiCube;
use crate::model::{Ablation, HyperNet, ModelConfig};
use crate::nn::{cosine_lr, SgdState};
use crate::scalar::Scalar;

/// Classical detector used to pick the pseudo mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predetector {
    #[default]
    DiffRx,
    Cva,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub mask_size: usize,
    pub model: ModelConfig,
    pub predetector: Predetector,
    pub ablation: Ablation,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            base_lr: 0.05,
            momentum: 0.9,
            weight_decay: 1e-4,
            epochs: 200,
            mask_size: 8192,
            model: ModelConfig::default(),
            predetector: Predetector::DiffRx,
            ablation: Ablation::Full,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, detail: String| Err(Error::contract("train config", format!("{field}: {detail}")));
        if self.epochs < 1 {
            return bad("epochs", "must be at least 1".into());
        }
        if !(self.base_lr.is_finite() && self.base_lr > 0.0) {
            return bad("base_lr", format!("must be positive, got {}", self.base_lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", format!("must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay", format!("must be nonnegative, got {}", self.weight_decay));
        }
        if self.mask_size < 1 {
            return bad("mask_size", "must be at least 1".into());
        }
        Ok(())
    }

    /// Model configuration for `bands`-band input under the configured ablation.
    pub fn model_for(&self, bands: usize) -> ModelConfig {
        ModelConfig { input_channels: bands, ..self.model.clone() }.with_attention(self.ablation.attention())
    }

    pub fn loss_kind(&self) -> LossKind {
        self.ablation.into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossReport {
    pub epochs: Vec<EpochRecord>,
}

impl LossReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }

    /// `(epoch, lr, loss)` triples, without timings.
    pub fn trajectory(&self) -> Vec<(usize, f64, f64)> {
        self.epochs.iter().map(|e| (e.epoch, e.lr, e.loss)).collect()
    }
}

pub fn train<T: Scalar>(
    x1: &HsiCube<T>,
    x2: &HsiCube<T>,
    mask: &PseudoMask,
    cfg: &TrainConfig,
) -> Result<(HyperNet<T>, LossReport)> {
    train_with(x1, x2, mask, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with<T: Scalar>(
    x1: &HsiCube<T>,
    x2: &HsiCube<T>,
    mask: &PseudoMask,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<(HyperNet<T>, LossReport)> {
    cfg.validate()?;
    if !x1.same_shape(x2) {
        return Err(Error::shape("train", "the two images differ in shape"));
    }
    if (mask.height(), mask.width()) != (x1.height, x1.width) {
        return Err(Error::shape(
            "train",
            format!("{}x{} mask for {}x{} images", mask.height(), mask.width(), x1.height, x1.width),
        ));
    }
    let mut net = HyperNet::new(&cfg.model_for(x1.bands), cfg.seed)?;
    let mut sgd = SgdState::new(&net.params, T::lit(cfg.base_lr), T::lit(cfg.momentum), T::lit(cfg.weight_decay));
    let (t1, t2) = (x1.to_tensor(), x2.to_tensor());
    let kind = cfg.loss_kind();
    let mut report = LossReport::default();
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let lr = cosine_lr(epoch, cfg.epochs, T::lit(cfg.base_lr));
        let (layers, mut s) = net.session(Mode::Train);
        let (a, b) = (s.input(t1.clone()), s.input(t2.clone()));
        let v = layers.forward_pair(&mut s, a, b)?;
        let loss_var = total_loss(&mut s.graph, v.z1, v.z2, v.p1, v.p2, mask, kind)?;
        let loss = s.value(loss_var).item();
        if !loss.is_finite() {
            return Err(Error::NonFinite { epoch: epoch + 1, value: loss.as_f64() });
        }
        s.graph.backward(loss_var)?;
        let grads = s.grads();
        drop(s);
        sgd.lr = lr;
        sgd.step(&mut net.params, &grads);
        let rec = EpochRecord { epoch: epoch + 1, lr: lr.as_f64(), loss: loss.as_f64(), seconds: start.elapsed().as_secs_f64() };
        progress(&rec);
        report.epochs.push(rec);
    }
    Ok((net, report))
}
