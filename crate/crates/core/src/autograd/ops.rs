use super::conv::{self, ConvDims};
use super::graph::{Graph, Op, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Lower bound on vector norms in [`Graph::cosine_channelwise`].
pub const COSINE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, running statistics updated.
    Train,
    /// Running statistics only.
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolAxis {
    /// Global pooling over the H x W plane: `[1,H,W,C] -> [1,1,1,C]`.
    Spatial,
    /// Pooling across channels at each pixel: `[1,H,W,C] -> [1,H,W,1]`.
    Channel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    Avg,
    Max,
}

/// Running statistics and constants of one batch-normalization layer.
#[derive(Clone, Debug, PartialEq)]
pub struct BnState<T> {
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: T,
    pub momentum: T,
}

impl<T: Scalar> BnState<T> {
    pub fn new(channels: usize) -> Self {
        BnState {
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            eps: T::lit(1e-5),
            momentum: T::lit(0.1),
        }
    }

    pub fn channels(&self) -> usize {
        self.running_mean.len()
    }
}

/// Maps every element of `a_shape` to the element of the broadcast operand.
fn broadcast_index(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let compatible = a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| x == y || y == 1);
    if !compatible {
        return Err(Error::shape(op, format!("cannot broadcast {:?} against {:?}", b, a)));
    }
    let rank = a.len();
    let mut b_strides = vec![0usize; rank];
    let mut s = 1;
    for ax in (0..rank).rev() {
        b_strides[ax] = if b[ax] == 1 { 0 } else { s };
        s *= b[ax];
    }
    let n: usize = a.iter().product();
    let mut idx = vec![0usize; n];
    let mut counter = vec![0usize; rank];
    for slot in idx.iter_mut() {
        *slot = counter.iter().zip(&b_strides).map(|(c, s)| c * s).sum();
        for ax in (0..rank).rev() {
            counter[ax] += 1;
            if counter[ax] < a[ax] {
                break;
            }
            counter[ax] = 0;
        }
    }
    Ok(idx)
}

impl<T: Scalar> Graph<T> {
    /// Stride-1 convolution with zero "same" padding. `kernel` is
    /// `[kh, kw, c_in, c_out]` with odd spatial extent, `bias` is `[c_out]`.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Var) -> Result<Var> {
        let (h, w, cin) = self.value(input).hwc("conv2d")?;
        let (kh, kw, kc, cout) = match self.shape(kernel) {
            &[kh, kw, kc, cout] => (kh, kw, kc, cout),
            s => return Err(Error::shape("conv2d", format!("kernel must be 4-D, got {:?}", s))),
        };
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(Error::contract("conv2d", format!("kernel extent {}x{} is not odd", kh, kw)));
        }
        if kc != cin {
            return Err(Error::shape(
                "conv2d",
                format!("input has {} channels, kernel expects {}", cin, kc),
            ));
        }
        if self.shape(bias) != [cout] {
            return Err(Error::shape(
                "conv2d",
                format!("bias shape {:?}, expected [{}]", self.shape(bias), cout),
            ));
        }
        let d = ConvDims { h, w, kh, kw, cin, cout };
        let out = conv::forward(
            d,
            self.value(input).data(),
            self.value(kernel).data(),
            self.value(bias).data(),
        );
        let rg = self.needs(input) || self.needs(kernel) || self.needs(bias);
        Ok(self.push(
            Tensor::image(h, w, cout, out)?,
            rg,
            Op::Conv2d { input, kernel, bias },
        ))
    }

    /// Per-channel batch normalization over the H x W plane.
    pub fn batch_norm(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        state: &mut BnState<T>,
        mode: Mode,
    ) -> Result<Var> {
        let (h, w, c) = self.value(input).hwc("batch_norm")?;
        if self.shape(gamma) != [c] || self.shape(beta) != [c] || state.channels() != c {
            return Err(Error::shape(
                "batch_norm",
                format!(
                    "input has {} channels; gamma {:?}, beta {:?}, state {}",
                    c,
                    self.shape(gamma),
                    self.shape(beta),
                    state.channels()
                ),
            ));
        }
        let x = self.value(input).data();
        let npx = h * w;
        let (mean, inv_std) = match mode {
            Mode::Train => {
                let n = T::count(npx);
                let mut mean = vec![T::zero(); c];
                for px in x.chunks(c) {
                    for (m, &v) in mean.iter_mut().zip(px) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m = *m / n);
                let mut var = vec![T::zero(); c];
                for px in x.chunks(c) {
                    for ((s, &v), &m) in var.iter_mut().zip(px).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|s| *s = *s / n);
                let mom = state.momentum;
                for ch in 0..c {
                    state.running_mean[ch] = (T::one() - mom) * state.running_mean[ch] + mom * mean[ch];
                    state.running_var[ch] = (T::one() - mom) * state.running_var[ch] + mom * var[ch];
                }
                let inv: Vec<T> = var.iter().map(|&v| T::one() / (v + state.eps).sqrt()).collect();
                (mean, inv)
            }
            Mode::Eval => {
                let inv = state
                    .running_var
                    .iter()
                    .map(|&v| T::one() / (v.max(T::zero()) + state.eps).sqrt())
                    .collect();
                (state.running_mean.clone(), inv)
            }
        };
        let g = self.value(gamma).data();
        let b = self.value(beta).data();
        let mut xhat = Vec::with_capacity(x.len());
        let mut out = Vec::with_capacity(x.len());
        for px in x.chunks(c) {
            for ch in 0..c {
                let xh = (px[ch] - mean[ch]) * inv_std[ch];
                xhat.push(xh);
                out.push(g[ch] * xh + b[ch]);
            }
        }
        let rg = self.needs(input) || self.needs(gamma) || self.needs(beta);
        Ok(self.push(
            Tensor::image(h, w, c, out)?,
            rg,
            Op::BatchNorm {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_stats: mode == Mode::Train,
            },
        ))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let out = self.value(input).map(|v| if v > T::zero() { v } else { T::zero() });
        let rg = self.needs(input);
        self.push(out, rg, Op::Relu(input))
    }

    pub fn sigmoid(&mut self, input: Var) -> Var {
        let out = self.value(input).map(sigmoid);
        let rg = self.needs(input);
        self.push(out, rg, Op::Sigmoid(input))
    }

    /// Average or max pooling, either globally over space or across channels.
    /// Max pooling routes its gradient to the first maximum in scan order.
    pub fn pool(&mut self, input: Var, axis: PoolAxis, kind: PoolKind) -> Result<Var> {
        let (h, w, c) = self.value(input).hwc("pool")?;
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::contract("pool", "empty input"));
        }
        let x = self.value(input).data();
        let (shape, groups): (Vec<usize>, Vec<Vec<usize>>) = match axis {
            PoolAxis::Spatial => (
                vec![1, 1, 1, c],
                (0..c).map(|ch| (0..h * w).map(|p| p * c + ch).collect()).collect(),
            ),
            PoolAxis::Channel => (
                vec![1, h, w, 1],
                (0..h * w).map(|p| (p * c..(p + 1) * c).collect()).collect(),
            ),
        };
        let mut out = Vec::with_capacity(groups.len());
        let mut argmax = Vec::new();
        for group in &groups {
            match kind {
                PoolKind::Avg => {
                    let s: T = group.iter().map(|&i| x[i]).sum();
                    out.push(s / T::count(group.len()));
                }
                PoolKind::Max => {
                    let mut best = group[0];
                    for &i in &group[1..] {
                        if x[i] > x[best] {
                            best = i;
                        }
                    }
                    argmax.push(best);
                    out.push(x[best]);
                }
            }
        }
        let rg = self.needs(input);
        Ok(self.push(Tensor::new(shape, out)?, rg, Op::Pool { input, axis, kind, argmax }))
    }

    /// Channel concatenation; channels of `a` come first.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let (h, w, ca) = self.value(a).hwc("concat_channels")?;
        let (hb, wb, cb) = self.value(b).hwc("concat_channels")?;
        if (h, w) != (hb, wb) {
            return Err(Error::shape(
                "concat_channels",
                format!("spatial extent {}x{} vs {}x{}", h, w, hb, wb),
            ));
        }
        let xa = self.value(a).data();
        let xb = self.value(b).data();
        let mut out = Vec::with_capacity(h * w * (ca + cb));
        for p in 0..h * w {
            out.extend_from_slice(&xa[p * ca..(p + 1) * ca]);
            out.extend_from_slice(&xb[p * cb..(p + 1) * cb]);
        }
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::image(h, w, ca + cb, out)?, rg, Op::Concat { a, b }))
    }

    /// `a + b`, where `b` may have singleton axes broadcast against `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let b_index = broadcast_index("add", self.shape(a), self.shape(b))?;
        let xb = self.value(b).data();
        let va = self.value(a);
        let out: Vec<T> = va.data().iter().zip(&b_index).map(|(&x, &j)| x + xb[j]).collect();
        let t = Tensor::new(va.shape().to_vec(), out)?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(t, rg, Op::Add { a, b, b_index }))
    }

    /// `a * b` elementwise, where `b` may have singleton axes broadcast against `a`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let b_index = broadcast_index("mul", self.shape(a), self.shape(b))?;
        let xb = self.value(b).data();
        let va = self.value(a);
        let out: Vec<T> = va.data().iter().zip(&b_index).map(|(&x, &j)| x * xb[j]).collect();
        let t = Tensor::new(va.shape().to_vec(), out)?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(t, rg, Op::Mul { a, b, b_index }))
    }

    pub fn scale(&mut self, input: Var, factor: T) -> Var {
        let out = self.value(input).map(|v| v * factor);
        let rg = self.needs(input);
        self.push(out, rg, Op::Scale { input, factor })
    }

    /// Per-pixel cosine similarity over the channel axis: `[1,H,W,K] x2 -> [1,H,W,1]`.
    /// Norms are clamped below at [`COSINE_EPS`].
    pub fn cosine_channelwise(&mut self, a: Var, b: Var) -> Result<Var> {
        let (h, w, k) = self.value(a).hwc("cosine_channelwise")?;
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(
                "cosine_channelwise",
                format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            ));
        }
        let eps = T::lit(COSINE_EPS);
        let xa = self.value(a).data();
        let xb = self.value(b).data();
        let mut out = Vec::with_capacity(h * w);
        let mut norm_a = Vec::with_capacity(h * w);
        let mut norm_b = Vec::with_capacity(h * w);
        for (pa, pb) in xa.chunks(k.max(1)).zip(xb.chunks(k.max(1))) {
            let (dot, na, nb) = dot_norms(pa, pb);
            let (na, nb) = (na.max(eps), nb.max(eps));
            out.push(dot / (na * nb));
            norm_a.push(na);
            norm_b.push(nb);
        }
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::image(h, w, 1, out)?, rg, Op::Cosine { a, b, norm_a, norm_b }))
    }

    /// Identity forward; no gradient flows back through the result.
    pub fn stop_gradient(&mut self, input: Var) -> Var {
        let v = self.value(input).clone();
        self.push(v, false, Op::StopGradient)
    }

    /// Mean of a `[1,H,W,1]` map over the `true` cells of a row-major H x W mask.
    pub fn masked_mean(&mut self, input: Var, mask: &[bool]) -> Result<Var> {
        let (h, w, c) = self.value(input).hwc("masked_mean")?;
        if c != 1 || mask.len() != h * w {
            return Err(Error::shape(
                "masked_mean",
                format!("values [1,{},{},{}] vs mask of {} cells", h, w, c, mask.len()),
            ));
        }
        let count = mask.iter().filter(|&&m| m).count();
        if count == 0 {
            return Err(Error::contract("masked_mean", "mask selects no pixels"));
        }
        let x = self.value(input).data();
        let s: T = x.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).sum();
        let out = Tensor::scalar(s / T::count(count));
        let rg = self.needs(input);
        Ok(self.push(out, rg, Op::MaskedMean { input, mask: mask.to_vec(), count }))
    }

    pub fn sum(&mut self, input: Var) -> Var {
        let s: T = self.value(input).data().iter().copied().sum();
        let rg = self.needs(input);
        self.push(Tensor::scalar(s), rg, Op::Sum(input))
    }

    /// Vector-Jacobian products of node `i` for each input that needs a gradient.
    pub(crate) fn vjp(&self, i: usize, g: &Tensor<T>) -> Vec<(Var, Tensor<T>)> {
        let node = &self.nodes[i];
        let gd = g.data();
        let mut res = Vec::new();
        match &node.op {
            Op::Leaf | Op::StopGradient => {}
            Op::Conv2d { input, kernel, bias } => {
                let xin = self.value(*input);
                let kt = self.value(*kernel);
                let (h, w, cin) = xin.hwc("conv2d").expect("recorded shape");
                let ks = kt.shape();
                let d = ConvDims { h, w, kh: ks[0], kw: ks[1], cin, cout: ks[3] };
                if self.needs(*input) {
                    let gi = conv::backward_input(d, gd, kt.data());
                    res.push((*input, Tensor::new(xin.shape().to_vec(), gi).expect("shape")));
                }
                if self.needs(*kernel) {
                    let gk = conv::backward_kernel(d, xin.data(), gd);
                    res.push((*kernel, Tensor::new(ks.to_vec(), gk).expect("shape")));
                }
                if self.needs(*bias) {
                    let gb = conv::backward_bias(d, gd);
                    res.push((*bias, Tensor::new(vec![d.cout], gb).expect("shape")));
                }
            }
            Op::BatchNorm { input, gamma, beta, xhat, inv_std, batch_stats } => {
                let c = inv_std.len();
                let n = gd.len() / c;
                let mut sum_g = vec![T::zero(); c];
                let mut sum_gx = vec![T::zero(); c];
                for (px, xh) in gd.chunks(c).zip(xhat.chunks(c)) {
                    for ch in 0..c {
                        sum_g[ch] += px[ch];
                        sum_gx[ch] += px[ch] * xh[ch];
                    }
                }
                if self.needs(*input) {
                    let gam = self.value(*gamma).data();
                    let nt = T::count(n);
                    let mut gi = Vec::with_capacity(gd.len());
                    for (px, xh) in gd.chunks(c).zip(xhat.chunks(c)) {
                        for ch in 0..c {
                            let scale = gam[ch] * inv_std[ch];
                            let v = if *batch_stats {
                                scale * (px[ch] - sum_g[ch] / nt - xh[ch] * sum_gx[ch] / nt)
                            } else {
                                scale * px[ch]
                            };
                            gi.push(v);
                        }
                    }
                    res.push((*input, Tensor::new(g.shape().to_vec(), gi).expect("shape")));
                }
                if self.needs(*gamma) {
                    res.push((*gamma, Tensor::new(vec![c], sum_gx).expect("shape")));
                }
                if self.needs(*beta) {
                    res.push((*beta, Tensor::new(vec![c], sum_g).expect("shape")));
                }
            }
            Op::Relu(input) => {
                let x = self.value(*input).data();
                let gi = gd
                    .iter()
                    .zip(x)
                    .map(|(&gv, &xv)| if xv > T::zero() { gv } else { T::zero() })
                    .collect();
                res.push((*input, Tensor::new(g.shape().to_vec(), gi).expect("shape")));
            }
            Op::Sigmoid(input) => {
                let y = node.value.data();
                let gi = gd.iter().zip(y).map(|(&gv, &yv)| gv * yv * (T::one() - yv)).collect();
                res.push((*input, Tensor::new(g.shape().to_vec(), gi).expect("shape")));
            }
            Op::Pool { input, axis, kind, argmax } => {
                let xin = self.value(*input);
                let (h, w, c) = xin.hwc("pool").expect("recorded shape");
                let mut gi = vec![T::zero(); xin.numel()];
                match kind {
                    PoolKind::Max => {
                        for (&src, &gv) in argmax.iter().zip(gd) {
                            gi[src] += gv;
                        }
                    }
                    PoolKind::Avg => match axis {
                        PoolAxis::Spatial => {
                            let inv = T::one() / T::count(h * w);
                            for (p, slot) in gi.iter_mut().enumerate() {
                                *slot = gd[p % c] * inv;
                            }
                        }
                        PoolAxis::Channel => {
                            let inv = T::one() / T::count(c);
                            for (p, slot) in gi.iter_mut().enumerate() {
                                *slot = gd[p / c] * inv;
                            }
                        }
                    },
                }
                res.push((*input, Tensor::new(xin.shape().to_vec(), gi).expect("shape")));
            }
            Op::Concat { a, b } => {
                let (h, w, ca) = self.value(*a).hwc("concat").expect("recorded shape");
                let cb = self.value(*b).hwc("concat").expect("recorded shape").2;
                let ct = ca + cb;
                if self.needs(*a) {
                    let mut ga = Vec::with_capacity(h * w * ca);
                    for px in gd.chunks(ct) {
                        ga.extend_from_slice(&px[..ca]);
                    }
                    res.push((*a, Tensor::image(h, w, ca, ga).expect("shape")));
                }
                if self.needs(*b) {
                    let mut gb = Vec::with_capacity(h * w * cb);
                    for px in gd.chunks(ct) {
                        gb.extend_from_slice(&px[ca..]);
                    }
                    res.push((*b, Tensor::image(h, w, cb, gb).expect("shape")));
                }
            }
            Op::Add { a, b, b_index } => {
                if self.needs(*a) {
                    res.push((*a, g.clone()));
                }
                if self.needs(*b) {
                    let vb = self.value(*b);
                    let mut gb = vec![T::zero(); vb.numel()];
                    for (&gv, &j) in gd.iter().zip(b_index) {
                        gb[j] += gv;
                    }
                    res.push((*b, Tensor::new(vb.shape().to_vec(), gb).expect("shape")));
                }
            }
            Op::Mul { a, b, b_index } => {
                let xa = self.value(*a).data();
                let vb = self.value(*b);
                let xb = vb.data();
                if self.needs(*a) {
                    let ga = gd.iter().zip(b_index).map(|(&gv, &j)| gv * xb[j]).collect();
                    res.push((*a, Tensor::new(g.shape().to_vec(), ga).expect("shape")));
                }
                if self.needs(*b) {
                    let mut gb = vec![T::zero(); vb.numel()];
                    for ((&gv, &j), &av) in gd.iter().zip(b_index).zip(xa) {
                        gb[j] += gv * av;
                    }
                    res.push((*b, Tensor::new(vb.shape().to_vec(), gb).expect("shape")));
                }
            }
            Op::Scale { input, factor } => {
                res.push((*input, g.map(|v| v * *factor)));
            }
            Op::Cosine { a, b, norm_a, norm_b } => {
                let va = self.value(*a);
                let k = va.hwc("cosine").expect("recorded shape").2;
                let xa = va.data();
                let xb = self.value(*b).data();
                let cos = node.value.data();
                let eps = T::lit(COSINE_EPS);
                // d cos / d a = b / (|a||b|) - cos * a / |a|^2, with the second
                // term dropped where the norm is clamped at eps.
                let grad_side = |x: &[T], y: &[T], nx: &[T], ny: &[T]| -> Vec<T> {
                    let mut out = Vec::with_capacity(x.len());
                    for p in 0..nx.len() {
                        let px = &x[p * k..(p + 1) * k];
                        let py = &y[p * k..(p + 1) * k];
                        let raw_norm = px.iter().map(|&v| v * v).sum::<T>().sqrt();
                        let clamped = raw_norm <= eps;
                        for (&xv, &yv) in px.iter().zip(py) {
                            let mut d = yv / (nx[p] * ny[p]);
                            if !clamped {
                                d -= cos[p] * xv / (nx[p] * nx[p]);
                            }
                            out.push(gd[p] * d);
                        }
                    }
                    out
                };
                if self.needs(*a) {
                    let ga = grad_side(xa, xb, norm_a, norm_b);
                    res.push((*a, Tensor::new(va.shape().to_vec(), ga).expect("shape")));
                }
                if self.needs(*b) {
                    let gb = grad_side(xb, xa, norm_b, norm_a);
                    res.push((*b, Tensor::new(va.shape().to_vec(), gb).expect("shape")));
                }
            }
            Op::MaskedMean { input, mask, count } => {
                let inv = gd[0] / T::count(*count);
                let gi = mask.iter().map(|&m| if m { inv } else { T::zero() }).collect();
                let shape = self.value(*input).shape().to_vec();
                res.push((*input, Tensor::new(shape, gi).expect("shape")));
            }
            Op::Sum(input) => {
                let shape = self.value(*input).shape();
                res.push((*input, Tensor::full(shape, gd[0])));
            }
        }
        res.retain(|(v, _)| self.needs(*v));
        res
    }
}

/// Logistic function, clamped so that saturated inputs still land strictly
/// inside (0, 1).
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    let y = if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    };
    y.max(T::min_positive_value()).min(T::one() - T::epsilon())
}

fn dot_norms<T: Scalar>(a: &[T], b: &[T]) -> (T, T, T) {
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    (dot, na.sqrt(), nb.sqrt())
}
