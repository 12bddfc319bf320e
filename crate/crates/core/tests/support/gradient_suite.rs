//! Central-difference checks of every differentiable operation and block.

use hyperchange::autograd::{Mode, PoolAxis, PoolKind, Var};
use hyperchange::model::{ChannelAttention, Fusion, ModelConfig, Predictor, Projector, Rcab, Rsab, SpatialAttention};
use hyperchange::nn::{check_gradients, BatchNorm, Conv, ParamId, ParamStore, Session};
use hyperchange::training::{focal_cosine, symmetric_loss, total_loss, LossKind, PseudoMask};
use hyperchange::{Result, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-5;
/// Denominator floor of the norm-wise relative error.
pub const FLOOR: f64 = 1e-3;

const H: usize = 5;
const W: usize = 6;
const C: usize = 4;

pub struct CaseResult {
    pub name: String,
    pub worst: f64,
    pub worst_tensor: String,
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Contracts `out` with fixed random weights so every output element matters.
fn project(s: &mut Session<'_, f64>, out: Var, seed: u64) -> Result<Var> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let shape = s.value(out).shape().to_vec();
    let w = s.input(random(&mut rng, &shape, -1.0, 1.0));
    let y = s.graph.mul(out, w)?;
    Ok(s.graph.sum(y))
}

fn run(
    name: &str,
    store: &mut ParamStore<f64>,
    mode: Mode,
    mut f: impl FnMut(&mut Session<'_, f64>) -> Result<Var>,
) -> CaseResult {
    let checks = check_gradients(store, mode, STEP, FLOOR, |s| {
        let out = f(s)?;
        if s.value(out).is_scalar() {
            Ok(out)
        } else {
            project(s, out, 1)
        }
    })
    .unwrap_or_else(|e| panic!("{name}: {e}"));
    let worst = checks.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error)).expect("at least one tensor");
    CaseResult { name: name.to_string(), worst: worst.rel_error, worst_tensor: worst.name.clone() }
}

fn with_input(seed: u64, shape: &[usize]) -> (ParamStore<f64>, ParamId, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let x = store.add("input", random(&mut rng, shape, -1.0, 1.0));
    (store, x, rng)
}

/// Moves biases and BN betas off zero; zero-initialized biases put ReLUs
/// exactly on their kink when fed zero-mean normalized features.
fn randomize_offsets(store: &mut ParamStore<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = store
        .iter()
        .map(|(n, _)| n.to_string())
        .filter(|n| n.ends_with(".bias") || n.ends_with(".beta"))
        .collect();
    for n in names {
        let t = store.by_name_mut(&n).unwrap();
        t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
    }
}

fn image() -> [usize; 4] {
    [1, H, W, C]
}

fn op_cases(out: &mut Vec<CaseResult>) {
    for k in [1, 3, 7] {
        let (mut store, x, mut rng) = with_input(k as u64, &image());
        let conv = Conv::new(&mut store, &mut rng, "conv", k, C, 3);
        *store.get_mut(conv.bias) = random(&mut rng, &[3], -0.5, 0.5);
        out.push(run(&format!("conv2d {k}x{k}"), &mut store, Mode::Train, |s| {
            let xv = s.var(x);
            conv.forward(s, xv)
        }));
    }
    for (label, mode) in [("batch_norm train", Mode::Train), ("batch_norm eval", Mode::Eval)] {
        let (mut store, x, mut rng) = with_input(10, &image());
        let bn = BatchNorm::new(&mut store, "bn", C);
        *store.get_mut(bn.gamma) = random(&mut rng, &[C], 0.5, 1.5);
        *store.get_mut(bn.beta) = random(&mut rng, &[C], -0.5, 0.5);
        store.bn_mut(bn.state).running_mean = vec![0.1, -0.2, 0.3, 0.0];
        store.bn_mut(bn.state).running_var = vec![0.5, 1.5, 2.0, 0.8];
        out.push(run(label, &mut store, mode, |s| {
            let xv = s.var(x);
            bn.forward(s, xv)
        }));
    }
    let (mut store, x, _) = with_input(11, &image());
    out.push(run("relu", &mut store, Mode::Train, |s| Ok(s.graph.relu(s.var(x)))));
    out.push(run("sigmoid", &mut store, Mode::Train, |s| {
        let xv = s.var(x);
        Ok(s.graph.sigmoid(xv))
    }));
    for axis in [PoolAxis::Spatial, PoolAxis::Channel] {
        for kind in [PoolKind::Avg, PoolKind::Max] {
            out.push(run(&format!("pool {axis:?} {kind:?}"), &mut store, Mode::Train, |s| {
                let xv = s.var(x);
                s.graph.pool(xv, axis, kind)
            }));
        }
    }
    out.push(run("scale", &mut store, Mode::Train, |s| {
        let xv = s.var(x);
        Ok(s.graph.scale(xv, -1.7))
    }));

    let (mut store, a, mut rng) = with_input(12, &image());
    let b = store.add("b", random(&mut rng, &[1, H, W, 2], -1.0, 1.0));
    out.push(run("concat_channels", &mut store, Mode::Train, |s| {
        let (av, bv) = (s.var(a), s.var(b));
        s.graph.concat_channels(av, bv)
    }));
    for (label, shape) in [("same", vec![1, H, W, C]), ("channel map", vec![1, 1, 1, C]), ("pixel map", vec![1, H, W, 1])] {
        let (mut store, a, mut rng) = with_input(13, &image());
        let b = store.add("b", random(&mut rng, &shape, -1.0, 1.0));
        out.push(run(&format!("add {label}"), &mut store, Mode::Train, |s| {
            let (av, bv) = (s.var(a), s.var(b));
            s.graph.add(av, bv)
        }));
        out.push(run(&format!("mul {label}"), &mut store, Mode::Train, |s| {
            let (av, bv) = (s.var(a), s.var(b));
            s.graph.mul(av, bv)
        }));
    }
    let (mut store, a, mut rng) = with_input(14, &image());
    let b = store.add("b", random(&mut rng, &image(), -1.0, 1.0));
    out.push(run("cosine_channelwise", &mut store, Mode::Train, |s| {
        let (av, bv) = (s.var(a), s.var(b));
        s.graph.cosine_channelwise(av, bv)
    }));
    let (mut store, x, mut rng) = with_input(15, &[1, H, W, 1]);
    let mask: Vec<bool> = (0..H * W).map(|_| rng.random_bool(0.5)).collect();
    out.push(run("masked_mean", &mut store, Mode::Train, |s| {
        let xv = s.var(x);
        s.graph.masked_mean(xv, &mask)
    }));
    out.push(run("sum", &mut store, Mode::Train, |s| {
        let xv = s.var(x);
        Ok(s.graph.sum(xv))
    }));
}

fn block_cases(out: &mut Vec<CaseResult>) {
    let n = 4;
    let cfg = ModelConfig::new(n, C);

    let (mut store, x, mut rng) = with_input(20, &image());
    let ca = ChannelAttention::new(&mut store, &mut rng, "ca", C, 2);
    randomize_offsets(&mut store, 99);
    out.push(run("channel attention", &mut store, Mode::Train, |s| {
        let xv = s.var(x);
        ca.forward(s, xv)
    }));
    let (mut store, x, mut rng) = with_input(21, &image());
    let sa = SpatialAttention::new(&mut store, &mut rng, "sa");
    randomize_offsets(&mut store, 99);
    out.push(run("spatial attention", &mut store, Mode::Train, |s| {
        let xv = s.var(x);
        sa.forward(s, xv)
    }));
    for index in [1, 2] {
        let (mut store, x, mut rng) = with_input(22 + index as u64, &image());
        let b = Rsab::new(&mut store, &mut rng, &cfg, index);
        randomize_offsets(&mut store, 99);
        out.push(run(&format!("rsab block {index}"), &mut store, Mode::Train, |s| {
            let xv = s.var(x);
            b.forward(s, xv)
        }));
        let (mut store, x, mut rng) = with_input(24 + index as u64, &image());
        let b = Rcab::new(&mut store, &mut rng, &cfg, index);
        randomize_offsets(&mut store, 99);
        out.push(run(&format!("rcab block {index}"), &mut store, Mode::Train, |s| {
            let xv = s.var(x);
            b.forward(s, xv)
        }));
    }
    let (mut store, a, mut rng) = with_input(27, &[1, H, W, n]);
    let b = store.add("b", random(&mut rng, &[1, H, W, n], -1.0, 1.0));
    let fusion = Fusion::new(&mut store, &mut rng, n);
    randomize_offsets(&mut store, 99);
    out.push(run("fusion", &mut store, Mode::Train, |s| {
        let (av, bv) = (s.var(a), s.var(b));
        fusion.forward(s, av, bv)
    }));
    let (mut store, x, mut rng) = with_input(28, &[1, H, W, 2 * n]);
    let proj = Projector::new(&mut store, &mut rng, n);
    randomize_offsets(&mut store, 99);
    out.push(run("projector", &mut store, Mode::Train, |s| {
        let xv = s.var(x);
        proj.forward(s, xv)
    }));
    let (mut store, x, mut rng) = with_input(29, &[1, H, W, 2 * n]);
    let pred = Predictor::new(&mut store, &mut rng, n);
    randomize_offsets(&mut store, 99);
    out.push(run("predictor", &mut store, Mode::Train, |s| {
        let xv = s.var(x);
        pred.forward(s, xv)
    }));

    let (mut store, z, mut rng) = with_input(30, &image());
    let p = store.add("p", random(&mut rng, &image(), -1.0, 1.0));
    out.push(run("focal cosine", &mut store, Mode::Train, |s| {
        let (zv, pv) = (s.var(z), s.var(p));
        focal_cosine(&mut s.graph, zv, pv)
    }));
    // The stopped projections get no gradient by contract, so they enter as
    // constants here; the un-stopped form checks the full pairing.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (z1, z2) = (random(&mut rng, &image(), -1.0, 1.0), random(&mut rng, &image(), -1.0, 1.0));
    let mut store = ParamStore::new();
    let p1 = store.add("p1", random(&mut rng, &image(), -1.0, 1.0));
    let p2 = store.add("p2", random(&mut rng, &image(), -1.0, 1.0));
    let mask = PseudoMask::new(H, W, (0..H * W).map(|i| i % 3 != 0).collect()).unwrap();
    for kind in [LossKind::Focal, LossKind::Plain] {
        out.push(run(&format!("total loss {kind:?}"), &mut store, Mode::Train, |s| {
            let (a, b) = (s.input(z1.clone()), s.input(z2.clone()));
            let (c, d) = (s.var(p1), s.var(p2));
            total_loss(&mut s.graph, a, b, c, d, &mask, kind)
        }));
    }
    let mut store = ParamStore::new();
    let ids: Vec<ParamId> =
        ["z1", "z2", "p1", "p2"].iter().map(|n| store.add(*n, random(&mut rng, &image(), -1.0, 1.0))).collect();
    out.push(run("symmetric loss", &mut store, Mode::Train, |s| {
        let v: Vec<Var> = ids.iter().map(|&id| s.var(id)).collect();
        symmetric_loss(&mut s.graph, v[0], v[1], v[2], v[3], &mask, LossKind::Focal)
    }));
}

/// Every case with the worst per-tensor relative error it produced.
pub fn run_suite() -> Vec<CaseResult> {
    let mut out = Vec::new();
    op_cases(&mut out);
    block_cases(&mut out);
    out
}
