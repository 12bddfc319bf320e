use rand::Rng;

use super::{ChannelAttention, ModelConfig, SpatialAttention};
use crate::autograd::Var;
use crate::error::{Error, Result};
use crate::nn::{BatchNorm, Conv, ParamStore, Session};
use crate::scalar::Scalar;

fn check_width<T: Scalar>(op: &'static str, s: &Session<'_, T>, x: Var, want: usize) -> Result<()> {
    let got = s.value(x).shape().last().copied().unwrap_or(0);
    if got != want {
        return Err(Error::contract(op, format!("expected {want} input channels, got {got}")));
    }
    Ok(())
}

/// Convolution followed by batch normalization.
#[derive(Clone, Debug)]
pub struct ConvBn {
    pub conv: Conv,
    pub bn: BatchNorm,
}

impl ConvBn {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        name: &str,
        size: usize,
        c_in: usize,
        c_out: usize,
    ) -> Self {
        ConvBn {
            conv: Conv::new(store, rng, &format!("{name}.conv"), size, c_in, c_out),
            bn: BatchNorm::new(store, &format!("{name}.bn"), c_out),
        }
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let y = self.conv.forward(s, x)?;
        self.bn.forward(s, y)
    }
}

/// Residual spatial attention block. Without attention it degrades to a
/// plain `relu(bn(conv3x3(x)))` layer with no shortcut.
#[derive(Clone, Debug)]
pub struct Rsab {
    pub index: usize,
    pub c_in: usize,
    pub body: ConvBn,
    pub ca: Option<ChannelAttention>,
    pub sa: Option<SpatialAttention>,
    /// 1x1 projection shortcut, first block only.
    pub down: Option<ConvBn>,
}

impl Rsab {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        cfg: &ModelConfig,
        index: usize,
    ) -> Self {
        let name = format!("rsab{index}");
        let c_in = if index == 1 { cfg.input_channels } else { cfg.n };
        let body = ConvBn::new(store, rng, &name, 3, c_in, cfg.n);
        let (ca, sa, down) = if cfg.attention {
            let ca = ChannelAttention::new(store, rng, &format!("{name}.ca"), cfg.n, cfg.bottleneck(cfg.n));
            let sa = SpatialAttention::new(store, rng, &format!("{name}.sa"));
            let down = (index == 1).then(|| ConvBn::new(store, rng, &format!("{name}.down"), 1, c_in, cfg.n));
            (Some(ca), Some(sa), down)
        } else {
            (None, None, None)
        };
        Rsab { index, c_in, body, ca, sa, down }
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        check_width("rsab", s, x, self.c_in)?;
        let x1 = self.body.forward(s, x)?;
        let (Some(ca), Some(sa)) = (&self.ca, &self.sa) else {
            return Ok(s.graph.relu(x1));
        };
        let f_ca = ca.forward(s, x1)?;
        let f_sa = sa.forward(s, f_ca)?;
        let shortcut = match &self.down {
            Some(down) => down.forward(s, x)?,
            None => x,
        };
        let sum = s.graph.add(shortcut, f_sa)?;
        Ok(s.graph.relu(sum))
    }
}

/// Residual channel attention block. The first block has no shortcut, later
/// blocks add their input back with no trailing activation. Without
/// attention it is a plain `relu(bn(conv1x1(x)))` layer.
#[derive(Clone, Debug)]
pub struct Rcab {
    pub index: usize,
    pub c_in: usize,
    pub body: ConvBn,
    pub ca: Option<ChannelAttention>,
}

impl Rcab {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        cfg: &ModelConfig,
        index: usize,
    ) -> Self {
        let name = format!("rcab{index}");
        let c_in = if index == 1 { cfg.input_channels } else { cfg.n };
        let body = ConvBn::new(store, rng, &name, 1, c_in, cfg.n);
        let ca = cfg
            .attention
            .then(|| ChannelAttention::new(store, rng, &format!("{name}.ca"), cfg.n, cfg.bottleneck(cfg.n)));
        Rcab { index, c_in, body, ca }
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        check_width("rcab", s, x, self.c_in)?;
        let x2 = self.body.forward(s, x)?;
        let Some(ca) = &self.ca else {
            return Ok(s.graph.relu(x2));
        };
        let weighted = ca.forward(s, x2)?;
        if self.index == 1 {
            Ok(weighted)
        } else {
            s.graph.add(x, weighted)
        }
    }
}

/// `[bn(conv1x1(spatial)); bn(conv3x3(spectral))]`, `2n` channels.
#[derive(Clone, Debug)]
pub struct Fusion {
    pub n: usize,
    pub spatial: ConvBn,
    pub spectral: ConvBn,
}

impl Fusion {
    pub fn new<T: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<T>, rng: &mut R, n: usize) -> Self {
        Fusion {
            n,
            spatial: ConvBn::new(store, rng, "fusion.spatial", 1, n, n),
            spectral: ConvBn::new(store, rng, "fusion.spectral", 3, n, n),
        }
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, spatial: Var, spectral: Var) -> Result<Var> {
        check_width("fusion", s, spatial, self.n)?;
        check_width("fusion", s, spectral, self.n)?;
        let a = self.spatial.forward(s, spatial)?;
        let b = self.spectral.forward(s, spectral)?;
        s.graph.concat_channels(a, b)
    }
}

/// Three 1x1 conv + BN layers of width `2n`; ReLU after the first two only.
#[derive(Clone, Debug)]
pub struct Projector {
    pub layers: Vec<ConvBn>,
}

impl Projector {
    pub fn new<T: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<T>, rng: &mut R, n: usize) -> Self {
        let w = 2 * n;
        Projector { layers: (1..=3).map(|i| ConvBn::new(store, rng, &format!("projector{i}"), 1, w, w)).collect() }
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let mut y = x;
        for (i, layer) in self.layers.iter().enumerate() {
            y = layer.forward(s, y)?;
            if i + 1 < self.layers.len() {
                y = s.graph.relu(y);
            }
        }
        Ok(y)
    }
}

/// `conv1x1(relu(bn(conv1x1(z))))` squeezing `2n -> n -> 2n`.
#[derive(Clone, Debug)]
pub struct Predictor {
    pub squeeze: ConvBn,
    pub expand: Conv,
}

impl Predictor {
    pub fn new<T: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<T>, rng: &mut R, n: usize) -> Self {
        Predictor {
            squeeze: ConvBn::new(store, rng, "predictor1", 1, 2 * n, n),
            expand: Conv::new(store, rng, "predictor2", 1, n, 2 * n),
        }
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, z: Var) -> Result<Var> {
        let h = self.squeeze.forward(s, z)?;
        let h = s.graph.relu(h);
        self.expand.forward(s, h)
    }
}
