use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Fusion, ModelConfig, Predictor, Projector, Rcab, Rsab};
use crate::autograd::{Mode, Var};
use crate::error::{Error, Result};
use crate::io::HsiCube;
use crate::nn::{ParamStore, Session};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Layer structure of the network; parameters live in the owning [`HyperNet`]'s store.
#[derive(Clone, Debug)]
pub struct Layers {
    pub rsab: Vec<Rsab>,
    pub rcab: Vec<Rcab>,
    pub fusion: Fusion,
    pub projector: Projector,
    pub predictor: Predictor,
}

/// Graph handles of one siamese forward pass.
#[derive(Clone, Copy, Debug)]
pub struct SiameseVars {
    pub f1: Var,
    pub f2: Var,
    pub z1: Var,
    pub z2: Var,
    pub p1: Var,
    pub p2: Var,
}

/// Values of one siamese forward pass: fused features, projections, predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct SiameseOutput<T> {
    pub f1: Tensor<T>,
    pub f2: Tensor<T>,
    pub z1: Tensor<T>,
    pub z2: Tensor<T>,
    pub p1: Tensor<T>,
    pub p2: Tensor<T>,
}

impl Layers {
    /// Fused attention-module features `[1,H,W,2n]`.
    pub fn encode<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let mut spatial = x;
        for b in &self.rsab {
            spatial = b.forward(s, spatial)?;
        }
        let mut spectral = x;
        for b in &self.rcab {
            spectral = b.forward(s, spectral)?;
        }
        self.fusion.forward(s, spatial, spectral)
    }

    /// Both views through the same encoder, projector and predictor.
    pub fn forward_pair<T: Scalar>(&self, s: &mut Session<'_, T>, x1: Var, x2: Var) -> Result<SiameseVars> {
        if s.value(x1).shape() != s.value(x2).shape() {
            return Err(Error::contract(
                "hypernet",
                format!("views differ in shape: {:?} vs {:?}", s.value(x1).shape(), s.value(x2).shape()),
            ));
        }
        let f1 = self.encode(s, x1)?;
        let f2 = self.encode(s, x2)?;
        let z1 = self.projector.forward(s, f1)?;
        let z2 = self.projector.forward(s, f2)?;
        let p1 = self.predictor.forward(s, z1)?;
        let p2 = self.predictor.forward(s, z2)?;
        Ok(SiameseVars { f1, f2, z1, z2, p1, p2 })
    }
}

#[derive(Clone, Debug)]
pub struct HyperNet<T> {
    pub config: ModelConfig,
    pub layers: Layers,
    pub params: ParamStore<T>,
}

impl<T: Scalar> HyperNet<T> {
    /// He-normal initialization from `seed`.
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let rsab = (1..=config.rsab_count).map(|i| Rsab::new(&mut params, &mut rng, config, i)).collect();
        let rcab = (1..=config.rcab_count).map(|i| Rcab::new(&mut params, &mut rng, config, i)).collect();
        let fusion = Fusion::new(&mut params, &mut rng, config.n);
        let projector = Projector::new(&mut params, &mut rng, config.n);
        let predictor = Predictor::new(&mut params, &mut rng, config.n);
        Ok(HyperNet {
            config: config.clone(),
            layers: Layers { rsab, rcab, fusion, projector, predictor },
            params,
        })
    }

    /// Layer structure alongside a fresh session over the parameters.
    pub fn session(&mut self, mode: Mode) -> (&Layers, Session<'_, T>) {
        (&self.layers, self.params.session(mode))
    }

    fn check_input(&self, x: &HsiCube<T>) -> Result<()> {
        if x.bands != self.config.input_channels {
            return Err(Error::contract(
                "hypernet",
                format!("model expects {} bands, image has {}", self.config.input_channels, x.bands),
            ));
        }
        Ok(())
    }

    pub fn forward(&mut self, x1: &HsiCube<T>, x2: &HsiCube<T>, mode: Mode) -> Result<SiameseOutput<T>> {
        self.check_input(x1)?;
        self.check_input(x2)?;
        let (layers, mut s) = self.session(mode);
        let (a, b) = (s.input(x1.to_tensor()), s.input(x2.to_tensor()));
        let v = layers.forward_pair(&mut s, a, b)?;
        let get = |x: Var| s.value(x).clone();
        Ok(SiameseOutput { f1: get(v.f1), f2: get(v.f2), z1: get(v.z1), z2: get(v.z2), p1: get(v.p1), p2: get(v.p2) })
    }

    /// Fused features of one image under running batch-norm statistics.
    pub fn features(&mut self, x: &HsiCube<T>) -> Result<HsiCube<T>> {
        self.check_input(x)?;
        let (layers, mut s) = self.session(Mode::Eval);
        let v = s.input(x.to_tensor());
        let f = layers.encode(&mut s, v)?;
        HsiCube::from_tensor(s.value(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cube(h: usize, w: usize, c: usize, seed: u64) -> HsiCube<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        HsiCube::new(h, w, c, (0..h * w * c).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn output_widths() {
        let mut net = HyperNet::<f64>::new(&ModelConfig::new(4, 5), 0).unwrap();
        let out = net.forward(&cube(8, 9, 5, 1), &cube(8, 9, 5, 2), Mode::Train).unwrap();
        for t in [&out.f1, &out.f2, &out.z1, &out.z2, &out.p1, &out.p2] {
            assert_eq!(t.shape(), [1, 8, 9, 8]);
        }
    }

    #[test]
    fn identical_views_give_identical_outputs() {
        let mut net = HyperNet::<f64>::new(&ModelConfig::new(4, 5), 3).unwrap();
        let x = cube(8, 8, 5, 1);
        let out = net.forward(&x, &x, Mode::Train).unwrap();
        assert_eq!(out.f1, out.f2);
        assert_eq!(out.z1, out.z2);
        assert_eq!(out.p1, out.p2);
    }

    #[test]
    fn swapping_views_swaps_outputs() {
        let mut net = HyperNet::<f64>::new(&ModelConfig::new(4, 5), 3).unwrap();
        let (a, b) = (cube(8, 8, 5, 1), cube(8, 8, 5, 2));
        let ab = net.forward(&a, &b, Mode::Train).unwrap();
        let ba = net.forward(&b, &a, Mode::Train).unwrap();
        assert_eq!((ab.f1, ab.z1, ab.p1), (ba.f2, ba.z2, ba.p2));
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let mut net = HyperNet::<f64>::new(&ModelConfig::new(4, 5), 3).unwrap();
        assert!(net.forward(&cube(8, 8, 5, 1), &cube(8, 9, 5, 2), Mode::Train).is_err());
        assert!(net.forward(&cube(8, 8, 4, 1), &cube(8, 8, 4, 2), Mode::Train).is_err());
        assert!(HyperNet::<f64>::new(&ModelConfig::new(1, 5), 0).is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let a = HyperNet::<f64>::new(&ModelConfig::new(4, 5), 7).unwrap();
        let b = HyperNet::<f64>::new(&ModelConfig::new(4, 5), 7).unwrap();
        assert_eq!(a.params.records(), b.params.records());
    }
}
