use serde::{Deserialize, Serialize};

use super::PseudoMask;
use crate::autograd::{Graph, Var};
use crate::error::{Error, Result};
use crate::model::Ablation;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `-(2 - c) c`
    Focal,
    /// `-c`
    Plain,
}

impl From<Ablation> for LossKind {
    fn from(a: Ablation) -> Self {
        match a {
            Ablation::Full => LossKind::Focal,
            Ablation::Base | Ablation::BaseSsa => LossKind::Plain,
        }
    }
}

pub fn focal_value<T: Scalar>(c: T) -> T {
    -(T::lit(2.0) - c) * c
}

pub fn plain_value<T: Scalar>(c: T) -> T {
    -c
}

/// Elementwise `c^2 - 2c`.
pub fn focal_of_cosine<T: Scalar>(g: &mut Graph<T>, c: Var) -> Result<Var> {
    let sq = g.mul(c, c)?;
    let lin = g.scale(c, T::lit(-2.0));
    g.add(sq, lin)
}

/// Per-pixel focal cosine loss `c^2 - 2c` of `c = cos(z, p)`, `[1,H,W,1]`.
pub fn focal_cosine<T: Scalar>(g: &mut Graph<T>, z: Var, p: Var) -> Result<Var> {
    let c = g.cosine_channelwise(z, p)?;
    focal_of_cosine(g, c)
}

/// Per-pixel negative cosine similarity, `[1,H,W,1]`.
pub fn plain_cosine<T: Scalar>(g: &mut Graph<T>, z: Var, p: Var) -> Result<Var> {
    let c = g.cosine_channelwise(z, p)?;
    Ok(g.scale(c, -T::one()))
}

pub fn pair_loss<T: Scalar>(g: &mut Graph<T>, z: Var, p: Var, kind: LossKind) -> Result<Var> {
    match kind {
        LossKind::Focal => focal_cosine(g, z, p),
        LossKind::Plain => plain_cosine(g, z, p),
    }
}

/// `0.5 * mean_g(L(t1, p2) + L(t2, p1))` with targets used as given.
#[allow(clippy::too_many_arguments)]
pub fn symmetric_loss<T: Scalar>(
    g: &mut Graph<T>,
    t1: Var,
    t2: Var,
    p1: Var,
    p2: Var,
    mask: &PseudoMask,
    kind: LossKind,
) -> Result<Var> {
    let shape = g.shape(t1).to_vec();
    if [t2, p1, p2].iter().any(|&v| g.shape(v) != shape.as_slice()) {
        return Err(Error::shape("total_loss", "projections and predictions differ in shape"));
    }
    if shape.len() != 4 || (shape[1], shape[2]) != (mask.height(), mask.width()) {
        return Err(Error::shape(
            "total_loss",
            format!("features {:?} vs {}x{} mask", shape, mask.height(), mask.width()),
        ));
    }
    let a = pair_loss(g, t1, p2, kind)?;
    let b = pair_loss(g, t2, p1, kind)?;
    let sum = g.add(a, b)?;
    let mean = g.masked_mean(sum, mask.selected())?;
    Ok(g.scale(mean, T::lit(0.5)))
}

/// The training objective: projections enter only as stop-gradient targets
/// for the other view's prediction.
pub fn total_loss<T: Scalar>(
    g: &mut Graph<T>,
    z1: Var,
    z2: Var,
    p1: Var,
    p2: Var,
    mask: &PseudoMask,
    kind: LossKind,
) -> Result<Var> {
    let t1 = g.stop_gradient(z1);
    let t2 = g.stop_gradient(z2);
    symmetric_loss(g, t1, t2, p1, p2, mask, kind)
}
