use rand::Rng;

use super::{he_normal, BnId, ParamId, ParamStore, Session};
use crate::autograd::Var;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Square-kernel convolution layer: `<name>.kernel` `[k, k, c_in, c_out]` and `<name>.bias`.
#[derive(Clone, Debug)]
pub struct Conv {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub size: usize,
    pub c_in: usize,
    pub c_out: usize,
}

impl Conv {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        rng: &mut R,
        name: &str,
        size: usize,
        c_in: usize,
        c_out: usize,
    ) -> Self {
        let kernel = store.add(
            format!("{name}.kernel"),
            he_normal(&[size, size, c_in, c_out], size * size * c_in, rng),
        );
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[c_out]));
        Conv { kernel, bias, size, c_in, c_out }
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let (k, b) = (s.var(self.kernel), s.var(self.bias));
        s.graph.conv2d(x, k, b)
    }
}

/// Batch normalization: `<name>.gamma` (ones), `<name>.beta` (zeros) and running statistics.
#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub state: BnId,
}

impl BatchNorm {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        let gamma = store.add(format!("{name}.gamma"), Tensor::full(&[channels], T::one()));
        let beta = store.add(format!("{name}.beta"), Tensor::zeros(&[channels]));
        let state = store.add_bn(name, channels);
        BatchNorm { gamma, beta, state }
    }

    pub fn forward<T: Scalar>(&self, s: &mut Session<'_, T>, x: Var) -> Result<Var> {
        let (g, b) = (s.var(self.gamma), s.var(self.beta));
        s.batch_norm(x, g, b, self.state)
    }
}
