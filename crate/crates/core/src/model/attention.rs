use rand::Rng;

use crate::autograd::{PoolAxis, PoolKind, Var};
use crate::error::Result;
use crate::nn::{Conv, ParamStore, Session};
use crate::scalar::Scalar;

/// `sigmoid(mlp(avgpool(x)) + mlp(maxpool(x)))` over the spatial plane, giving
/// a `[1,1,1,K]` gate. The two-layer 1x1 MLP is shared by both pooled inputs.
#[derive(Clone, Debug)]
pub struct ChannelAttention {
    pub fc1: Conv,
    pub fc2: Conv,
}

impl ChannelAttention {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        name: &str,
        width: usize,
        hidden: usize,
    ) -> Self {
        ChannelAttention {
            fc1: Conv::new(store, rng, &format!("{name}.fc1"), 1, width, hidden),
            fc2: Conv::new(store, rng, &format!("{name}.fc2"), 1, hidden, width),
        }
    }

    fn mlp<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let h = self.fc1.forward(s, x)?;
        let h = s.graph.relu(h);
        self.fc2.forward(s, h)
    }

    pub fn map<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let avg = s.graph.pool(x, PoolAxis::Spatial, PoolKind::Avg)?;
        let max = s.graph.pool(x, PoolAxis::Spatial, PoolKind::Max)?;
        let a = self.mlp(s, avg)?;
        let m = self.mlp(s, max)?;
        let sum = s.graph.add(a, m)?;
        Ok(s.graph.sigmoid(sum))
    }

    /// `x` gated by its own channel attention map.
    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let m = self.map(s, x)?;
        s.graph.mul(x, m)
    }
}

/// `sigmoid(conv7x7([avg_c(x); max_c(x)]))`, a `[1,H,W,1]` gate.
#[derive(Clone, Debug)]
pub struct SpatialAttention {
    pub conv: Conv,
}

impl SpatialAttention {
    pub fn new<T: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<T>, rng: &mut R, name: &str) -> Self {
        SpatialAttention { conv: Conv::new(store, rng, &format!("{name}.conv"), 7, 2, 1) }
    }

    pub fn map<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let avg = s.graph.pool(x, PoolAxis::Channel, PoolKind::Avg)?;
        let max = s.graph.pool(x, PoolAxis::Channel, PoolKind::Max)?;
        let both = s.graph.concat_channels(avg, max)?;
        let logits = self.conv.forward(s, both)?;
        Ok(s.graph.sigmoid(logits))
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let m = self.map(s, x)?;
        s.graph.mul(x, m)
    }
}
