//! Stride-1, zero "same"-padded 2-D convolution over `[1, H, W, C]` images
//! with `[kh, kw, c_in, c_out]` kernels.
//!
//! Each kernel partitions its output so that every element is written by one
//! task in a fixed summation order; results do not depend on thread count.

use rayon::prelude::*;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvDims {
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub cin: usize,
    pub cout: usize,
}

impl ConvDims {
    fn pad(&self) -> (isize, isize) {
        ((self.kh / 2) as isize, (self.kw / 2) as isize)
    }
}

pub(crate) fn forward<T: Scalar>(d: ConvDims, input: &[T], kernel: &[T], bias: &[T]) -> Vec<T> {
    let ConvDims { h, w, kh, kw, cin, cout } = d;
    let (ph, pw) = d.pad();
    let mut out = vec![T::zero(); h * w * cout];
    out.par_chunks_mut(w * cout).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let o = &mut row[x * cout..(x + 1) * cout];
            o.copy_from_slice(bias);
            for ky in 0..kh {
                let yy = y as isize + ky as isize - ph;
                if yy < 0 || yy >= h as isize {
                    continue;
                }
                for kx in 0..kw {
                    let xx = x as isize + kx as isize - pw;
                    if xx < 0 || xx >= w as isize {
                        continue;
                    }
                    let base = (yy as usize * w + xx as usize) * cin;
                    let px = &input[base..base + cin];
                    let kbase = (ky * kw + kx) * cin * cout;
                    for (ci, &v) in px.iter().enumerate() {
                        let krow = &kernel[kbase + ci * cout..kbase + (ci + 1) * cout];
                        for (acc, &k) in o.iter_mut().zip(krow) {
                            *acc += v * k;
                        }
                    }
                }
            }
        }
    });
    out
}

/// Gradient with respect to the input image.
pub(crate) fn backward_input<T: Scalar>(d: ConvDims, grad_out: &[T], kernel: &[T]) -> Vec<T> {
    let ConvDims { h, w, kh, kw, cin, cout } = d;
    let (ph, pw) = d.pad();
    let mut grad_in = vec![T::zero(); h * w * cin];
    grad_in.par_chunks_mut(w * cin).enumerate().for_each(|(yy, row)| {
        for xx in 0..w {
            let gi = &mut row[xx * cin..(xx + 1) * cin];
            for ky in 0..kh {
                let y = yy as isize + ph - ky as isize;
                if y < 0 || y >= h as isize {
                    continue;
                }
                for kx in 0..kw {
                    let x = xx as isize + pw - kx as isize;
                    if x < 0 || x >= w as isize {
                        continue;
                    }
                    let gbase = (y as usize * w + x as usize) * cout;
                    let go = &grad_out[gbase..gbase + cout];
                    let kbase = (ky * kw + kx) * cin * cout;
                    for (ci, acc) in gi.iter_mut().enumerate() {
                        let krow = &kernel[kbase + ci * cout..kbase + (ci + 1) * cout];
                        let mut s = T::zero();
                        for (&g, &k) in go.iter().zip(krow) {
                            s += g * k;
                        }
                        *acc += s;
                    }
                }
            }
        }
    });
    grad_in
}

/// Gradient with respect to the kernel; one task per `(ky, kx, ci)` row.
pub(crate) fn backward_kernel<T: Scalar>(d: ConvDims, input: &[T], grad_out: &[T]) -> Vec<T> {
    let ConvDims { h, w, kh: _, kw, cin, cout } = d;
    let (ph, pw) = d.pad();
    let mut grad_k = vec![T::zero(); d.kh * kw * cin * cout];
    grad_k.par_chunks_mut(cout).enumerate().for_each(|(r, row)| {
        let ci = r % cin;
        let kx = (r / cin) % kw;
        let ky = r / (cin * kw);
        for y in 0..h {
            let yy = y as isize + ky as isize - ph;
            if yy < 0 || yy >= h as isize {
                continue;
            }
            for x in 0..w {
                let xx = x as isize + kx as isize - pw;
                if xx < 0 || xx >= w as isize {
                    continue;
                }
                let v = input[(yy as usize * w + xx as usize) * cin + ci];
                let gbase = (y * w + x) * cout;
                for (acc, &g) in row.iter_mut().zip(&grad_out[gbase..gbase + cout]) {
                    *acc += v * g;
                }
            }
        }
    });
    grad_k
}

pub(crate) fn backward_bias<T: Scalar>(d: ConvDims, grad_out: &[T]) -> Vec<T> {
    let mut gb = vec![T::zero(); d.cout];
    for px in grad_out.chunks(d.cout) {
        for (acc, &g) in gb.iter_mut().zip(px) {
            *acc += g;
        }
    }
    gb
}
