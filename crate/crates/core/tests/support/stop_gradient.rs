//! One optimizer step on the siamese objective with an extra per-channel
//! offset added to both projections before they become loss targets.

use hyperchange::autograd::Mode;
use hyperchange::io::HsiCube;
use hyperchange::model::{HyperNet, ModelConfig};
use hyperchange::nn::SgdState;
use hyperchange::training::{symmetric_loss, total_loss, LossKind, PseudoMask};
use hyperchange::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Targets {
    /// Projections pass through stop-gradient (the training objective).
    Stopped,
    /// Projections used directly.
    Live,
    /// Projections and predictions both stopped.
    AllStopped,
}

pub struct StepOutcome {
    /// The offset only feeds the target side of the loss.
    pub offset_bits_unchanged: bool,
    pub offset_has_gradient: bool,
    /// `rsab1.conv.kernel`, upstream of both views.
    pub encoder_changed: bool,
    /// Trainable parameters only; batch-norm running statistics are excluded.
    pub any_parameter_changed: bool,
}

pub fn one_step(targets: Targets) -> StepOutcome {
    let (h, w, c, n) = (6, 6, 4, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cube = || HsiCube::new(h, w, c, (0..h * w * c).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
    let (x1, x2) = (cube(), cube());
    let mut net = HyperNet::<f64>::new(&ModelConfig::new(n, c), 1).unwrap();
    let offset_values: Vec<f64> = (0..2 * n).map(|i| 0.1 * (i as f64 + 1.0)).collect();
    let offset = net.params.add("offset", Tensor::new(vec![1, 1, 1, 2 * n], offset_values).unwrap());
    let trainable = |net: &HyperNet<f64>| net.params.iter().map(|(n, t)| (n.to_string(), t.clone())).collect::<Vec<_>>();
    let before = trainable(&net);
    let mask = PseudoMask::new(h, w, (0..h * w).map(|i| i % 4 != 1).collect()).unwrap();
    let mut sgd = SgdState::new(&net.params, 0.05, 0.9, 1e-4);

    let (layers, mut s) = net.session(Mode::Train);
    let (a, b) = (s.input(x1.to_tensor()), s.input(x2.to_tensor()));
    let v = layers.forward_pair(&mut s, a, b).unwrap();
    let off = s.var(offset);
    let z1 = s.graph.add(v.z1, off).unwrap();
    let z2 = s.graph.add(v.z2, off).unwrap();
    let loss = match targets {
        Targets::Stopped => total_loss(&mut s.graph, z1, z2, v.p1, v.p2, &mask, LossKind::Focal),
        Targets::Live => symmetric_loss(&mut s.graph, z1, z2, v.p1, v.p2, &mask, LossKind::Focal),
        Targets::AllStopped => {
            let (p1, p2) = (s.graph.stop_gradient(v.p1), s.graph.stop_gradient(v.p2));
            total_loss(&mut s.graph, z1, z2, p1, p2, &mask, LossKind::Focal)
        }
    }
    .unwrap();
    s.graph.backward(loss).unwrap();
    let grads = s.grads();
    let offset_has_gradient = s.graph.grad(off).is_some_and(|g| g.data().iter().any(|&x| x != 0.0));
    drop(s);
    sgd.step(&mut net.params, &grads);

    let after = trainable(&net);
    let find = |recs: &[(String, Tensor<f64>)], name: &str| recs.iter().find(|(n, _)| n == name).unwrap().1.clone();
    let bits = |t: &Tensor<f64>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    StepOutcome {
        offset_bits_unchanged: bits(&find(&before, "offset")) == bits(&find(&after, "offset")),
        offset_has_gradient,
        encoder_changed: find(&before, "rsab1.conv.kernel") != find(&after, "rsab1.conv.kernel"),
        any_parameter_changed: before.iter().zip(&after).any(|(p, q)| p.1 != q.1),
    }
}
