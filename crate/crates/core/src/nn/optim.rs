use crate::nn::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Cosine-decayed learning rate: `0.5 * base * (1 + cos(pi * epoch / total))`.
pub fn cosine_lr<T: Scalar>(epoch: usize, total_epochs: usize, base_lr: T) -> T {
    debug_assert!(epoch <= total_epochs);
    let t = epoch as f64 / total_epochs.max(1) as f64;
    base_lr * T::lit(0.5 * (1.0 + (std::f64::consts::PI * t).cos()))
}

/// One classical-momentum step with L2 folded into the gradient:
/// `v <- mu * v + (g + lambda * w)`, then `w <- w - lr * v`.
pub fn sgd_update<T: Scalar>(w: &mut [T], g: &[T], v: &mut [T], lr: T, momentum: T, weight_decay: T) {
    for ((wi, &gi), vi) in w.iter_mut().zip(g).zip(v.iter_mut()) {
        *vi = momentum * *vi + gi + weight_decay * *wi;
        *wi -= lr * *vi;
    }
}

/// Velocity buffers for every parameter of a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct SgdState<T> {
    pub velocity: Vec<Tensor<T>>,
    pub momentum: T,
    pub weight_decay: T,
    pub lr: T,
}

impl<T: Scalar> SgdState<T> {
    pub fn new(store: &ParamStore<T>, lr: T, momentum: T, weight_decay: T) -> Self {
        let velocity = store.ids().map(|id| Tensor::zeros(store.get(id).shape())).collect();
        SgdState { velocity, momentum, weight_decay, lr }
    }

    /// Updates every parameter that received a gradient. Parameters whose
    /// gradient is `None` (never reached by back-propagation) are left untouched,
    /// weight decay included.
    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &[Option<Tensor<T>>]) {
        let ids: Vec<_> = store.ids().collect();
        for ((id, g), v) in ids.into_iter().zip(grads).zip(&mut self.velocity) {
            let Some(g) = g else { continue };
            sgd_update(
                store.get_mut(id).data_mut(),
                g.data(),
                v.data_mut(),
                self.lr,
                self.momentum,
                self.weight_decay,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_schedule_endpoints() {
        assert_eq!(cosine_lr(0, 200, 0.05f64), 0.05);
        assert!(cosine_lr(200, 200, 0.05f64).abs() < 1e-18);
        assert!((cosine_lr(100, 200, 0.05f64) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn vanilla_sgd_without_momentum_or_decay() {
        let mut w = [1.0f64, -2.0];
        let mut v = [0.0; 2];
        sgd_update(&mut w, &[0.5, 0.25], &mut v, 0.1, 0.0, 0.0);
        assert_eq!(w, [1.0 - 0.05, -2.0 - 0.025]);
    }

    #[test]
    fn first_step_includes_weight_decay() {
        let (w0, g, lr, wd) = (2.0f64, 0.3, 0.05, 1e-4);
        let mut w = [w0];
        let mut v = [0.0];
        sgd_update(&mut w, &[g], &mut v, lr, 0.9, wd);
        assert_eq!(w[0], w0 - lr * (g + wd * w0));
    }

    #[test]
    fn two_steps_unroll() {
        // v1 = g, v2 = mu*g + g; total = lr*g*(2 + mu).
        let (g, lr, mu) = (0.7f64, 0.05, 0.9);
        let mut w = [0.0];
        let mut v = [0.0];
        sgd_update(&mut w, &[g], &mut v, lr, mu, 0.0);
        sgd_update(&mut w, &[g], &mut v, lr, mu, 0.0);
        assert!((-w[0] - lr * g * (2.0 + mu)).abs() < 1e-15);
    }

    #[test]
    fn parameters_without_gradient_are_untouched() {
        let mut store = ParamStore::<f64>::new();
        let a = store.add("a", Tensor::full(&[2], 1.0));
        let b = store.add("b", Tensor::full(&[2], 1.0));
        let mut opt = SgdState::new(&store, 0.1, 0.9, 1e-4);
        opt.step(&mut store, &[Some(Tensor::full(&[2], 1.0)), None]);
        assert_ne!(store.get(a).data(), &[1.0, 1.0]);
        assert_eq!(store.get(b).data(), &[1.0, 1.0]);
        assert_eq!(opt.velocity[1].data(), &[0.0, 0.0]);
    }
}
