//! Synthetic bi-temporal scene: a base cube of smooth material regions, a
//! second acquisition made by adding low-pass uniform noise and a pixel
//! offset, and anomalous changes implanted by copying blocks of a different
//! material from elsewhere in the scene.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::HsiCube;
use crate::detect::{Label, LabelMap};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub materials: usize,
    /// Distinct object signatures. When positive, the base scene carries one
    /// small object per anomaly and each anomaly copies one of those objects
    /// to a new place; when zero, anomalies copy background material instead.
    pub object_materials: usize,
    /// Noise is drawn from `uniform(-a, a)` before filtering.
    pub noise_amplitude: f64,
    /// Standard deviation, in pixels, of the noise low-pass filter.
    pub blur_sigma: f64,
    pub offset_x: i64,
    pub offset_y: i64,
    pub anomaly_count: usize,
    /// Side length of each square anomaly block.
    pub anomaly_size: usize,
    /// Smoothness, in pixels, of the material region field.
    pub region_sigma: f64,
    /// Peak value of the material signatures.
    pub signature_scale: f64,
    /// Relative per-pixel brightness and band jitter of the base scene.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            height: 64,
            width: 64,
            bands: 16,
            materials: 6,
            object_materials: 2,
            noise_amplitude: 10.0,
            blur_sigma: 10.0,
            offset_x: 1,
            offset_y: 1,
            anomaly_count: 6,
            anomaly_size: 3,
            region_sigma: 4.0,
            signature_scale: 10.0,
            jitter: 0.02,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::contract("synth config", format!("{field}: {why}")));
        if self.height == 0 || self.width == 0 || self.bands == 0 {
            return bad("height/width/bands", "must be positive");
        }
        if self.materials < 2 {
            return bad("materials", "need at least 2 materials");
        }
        if !(self.blur_sigma > 0.0) || !(self.region_sigma > 0.0) {
            return bad("blur_sigma/region_sigma", "must be > 0");
        }
        if !(self.noise_amplitude >= 0.0) || !(self.jitter >= 0.0) || !(self.signature_scale > 0.0) {
            return bad("noise_amplitude/jitter/signature_scale", "must be finite and non-negative");
        }
        if self.offset_x.unsigned_abs() as usize >= self.width
            || self.offset_y.unsigned_abs() as usize >= self.height
        {
            return bad("offset_x/offset_y", "offset must be smaller than the image");
        }
        if self.anomaly_count > 0 {
            let s = self.anomaly_size;
            if s == 0 || s > self.height.min(self.width) {
                return bad("anomaly_size", "block does not fit inside the image");
            }
            // Blocks keep a one-pixel gap, and each needs a source block elsewhere.
            if 2 * self.anomaly_count * (s + 1) * (s + 1) > self.height * self.width {
                return bad("anomaly_count", "anomaly blocks do not fit inside the image");
            }
            if self.object_materials > 0
                && (s + self.offset_y.unsigned_abs() as usize > self.height
                    || s + self.offset_x.unsigned_abs() as usize > self.width)
            {
                return bad("anomaly_size", "objects do not fit inside the offset image");
            }
        }
        Ok(())
    }
}

/// Output of [`synth_bitemporal`].
#[derive(Clone, Debug)]
pub struct SynthScene<T> {
    pub x1: HsiCube<T>,
    pub x2: HsiCube<T>,
    pub truth: LabelMap,
    /// Material index of every base-scene pixel.
    pub materials: Vec<usize>,
}

/// Half-sample symmetric reflection, repeated for indices far outside.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let w: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian blur of a row-major `height x width` field. The kernel
/// has radius `ceil(3 sigma)`, sums to one, and edges are reflected.
pub fn gaussian_lowpass<T: Scalar>(field: &[T], height: usize, width: usize, sigma: f64) -> Result<Vec<T>> {
    if !(sigma > 0.0) {
        return Err(Error::contract("gaussian_lowpass", format!("sigma must be > 0, got {sigma}")));
    }
    if field.len() != height * width {
        return Err(Error::shape(
            "gaussian_lowpass",
            format!("{}x{} field with {} values", height, width, field.len()),
        ));
    }
    let kernel: Vec<T> = gaussian_kernel(sigma).into_iter().map(T::lit).collect();
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![T::zero(); field.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = T::zero();
            for (k, &wk) in kernel.iter().enumerate() {
                let xx = reflect(x as isize + k as isize - r, width);
                acc += wk * field[y * width + xx];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![T::zero(); field.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = T::zero();
            for (k, &wk) in kernel.iter().enumerate() {
                let yy = reflect(y as isize + k as isize - r, height);
                acc += wk * tmp[yy * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    Ok(out)
}

fn shifted_index(i: usize, d: i64, n: usize) -> usize {
    (i as i64 - d).clamp(0, n as i64 - 1) as usize
}

/// Translates a cube by `(dx, dy)` pixels: output `(row, col)` takes input
/// `(row - dy, col - dx)`, with edge pixels replicated into the uncovered border.
pub fn shift_image<T: Scalar>(cube: &HsiCube<T>, dx: i64, dy: i64) -> Result<HsiCube<T>> {
    if dx.unsigned_abs() as usize >= cube.width || dy.unsigned_abs() as usize >= cube.height {
        return Err(Error::contract(
            "shift_image",
            format!("shift ({dx}, {dy}) out of range for {}x{}", cube.height, cube.width),
        ));
    }
    let mut data = Vec::with_capacity(cube.data.len());
    for row in 0..cube.height {
        for col in 0..cube.width {
            let src = cube.pixel(shifted_index(row, dy, cube.height), shifted_index(col, dx, cube.width));
            data.extend_from_slice(src);
        }
    }
    Ok(HsiCube { data, ..cube.clone() })
}

fn material_field(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let n = cfg.height * cfg.width;
    let mut best = vec![0usize; n];
    let mut best_val = vec![f64::NEG_INFINITY; n];
    for m in 0..cfg.materials {
        let white: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let smooth = gaussian_lowpass(&white, cfg.height, cfg.width, cfg.region_sigma)?;
        for p in 0..n {
            if smooth[p] > best_val[p] {
                best_val[p] = smooth[p];
                best[p] = m;
            }
        }
    }
    Ok(best)
}

/// Smooth spectra: a baseline plus a few Gaussian absorption/reflection bumps,
/// scaled to peak at `signature_scale`.
fn signatures(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let c = cfg.bands as f64;
    (0..cfg.materials + cfg.object_materials)
        .map(|_| {
            let base = rng.random_range(0.1..0.4);
            let bumps: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.random_range(0.0..c),
                        rng.random_range(c / 8.0..c / 3.0 + 1.0),
                        rng.random_range(-0.3..1.0),
                    )
                })
                .collect();
            let raw: Vec<f64> = (0..cfg.bands)
                .map(|b| {
                    let x = b as f64;
                    let v: f64 = bumps
                        .iter()
                        .map(|&(mu, sd, amp)| amp * (-(x - mu) * (x - mu) / (2.0 * sd * sd)).exp())
                        .sum();
                    (base + v).max(0.02)
                })
                .collect();
            let peak = raw.iter().cloned().fold(f64::MIN, f64::max);
            raw.into_iter().map(|v| v / peak * cfg.signature_scale).collect()
        })
        .collect()
}

fn blocks_overlap(a: (usize, usize), b: (usize, usize), size: usize, gap: usize) -> bool {
    let s = (size + gap) as isize;
    let (ar, ac) = (a.0 as isize, a.1 as isize);
    let (br, bc) = (b.0 as isize, b.1 as isize);
    (ar - br).abs() < s && (ac - bc).abs() < s
}

/// Stamps one `anomaly_size` object per anomaly into the material field,
/// keeping each clear of the border the offset would uncover. Returns the
/// top-left corners in base-scene coordinates.
fn place_objects(cfg: &SynthConfig, rng: &mut ChaCha8Rng, materials: &mut [usize]) -> Result<Vec<(usize, usize)>> {
    if cfg.object_materials == 0 {
        return Ok(Vec::new());
    }
    let (h, w, s) = (cfg.height, cfg.width, cfg.anomaly_size);
    let rows = (-cfg.offset_y).max(0) as usize..=h - s - cfg.offset_y.max(0) as usize;
    let cols = (-cfg.offset_x).max(0) as usize..=w - s - cfg.offset_x.max(0) as usize;
    let mut placed: Vec<(usize, usize)> = Vec::new();
    for k in 0..cfg.anomaly_count {
        let spot = (0..20_000).find_map(|_| {
            let o = (rng.random_range(rows.clone()), rng.random_range(cols.clone()));
            (!placed.iter().any(|&q| blocks_overlap(o, q, s, 1))).then_some(o)
        });
        let Some(o) = spot else {
            return Err(Error::contract(
                "synth_bitemporal",
                format!("could not place object {} of {}", k + 1, cfg.anomaly_count),
            ));
        };
        for i in 0..s {
            for j in 0..s {
                materials[(o.0 + i) * w + o.1 + j] = cfg.materials + k % cfg.object_materials;
            }
        }
        placed.push(o);
    }
    Ok(placed)
}

/// Generates `(x1, x2, truth)` deterministically from `cfg.seed`.
pub fn synth_bitemporal<T: Scalar>(cfg: &SynthConfig) -> Result<SynthScene<T>> {
    cfg.validate()?;
    let (h, w, c) = (cfg.height, cfg.width, cfg.bands);
    let n = h * w;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut materials = material_field(cfg, &mut rng)?;
    let objects = place_objects(cfg, &mut rng, &mut materials)?;
    let sigs = signatures(cfg, &mut rng);
    let mut base = Vec::with_capacity(n * c);
    for &m in &materials {
        let z: f64 = StandardNormal.sample(&mut rng);
        let brightness = 1.0 + cfg.jitter * z;
        for b in 0..c {
            let e: f64 = StandardNormal.sample(&mut rng);
            base.push(sigs[m][b] * brightness + 0.5 * cfg.jitter * cfg.signature_scale * e);
        }
    }

    let mut noisy = base.clone();
    if cfg.noise_amplitude > 0.0 {
        let a = cfg.noise_amplitude;
        for b in 0..c {
            let field: Vec<f64> = (0..n).map(|_| rng.random_range(-a..=a)).collect();
            let smooth = gaussian_lowpass(&field, h, w, cfg.blur_sigma)?;
            for p in 0..n {
                noisy[p * c + b] += smooth[p];
            }
        }
    }

    let x1 = HsiCube::new(h, w, c, base.into_iter().map(T::lit).collect())?;
    let moved = HsiCube::new(h, w, c, noisy)?;
    let mut x2 = shift_image(&moved, cfg.offset_x, cfg.offset_y)?;
    // Material labels as seen in the second acquisition.
    let labels2: Vec<usize> = (0..n)
        .map(|p| {
            let (row, col) = (p / w, p % w);
            materials[shifted_index(row, cfg.offset_y, h) * w + shifted_index(col, cfg.offset_x, w)]
        })
        .collect();

    let mut truth = LabelMap::filled(h, w, Label::Unchanged);
    let s = cfg.anomaly_size;
    let mut targets: Vec<(usize, usize)> = Vec::new();
    let mut sources: Vec<(usize, usize)> = Vec::new();
    let max_tries = 20_000;
    // Objects as seen in the second acquisition are the anomaly sources.
    let object_sources: Vec<(usize, usize)> = objects
        .iter()
        .map(|&(r, c)| ((r as i64 + cfg.offset_y) as usize, (c as i64 + cfg.offset_x) as usize))
        .collect();
    for k in 0..cfg.anomaly_count {
        let mut placed = false;
        for _ in 0..max_tries {
            let t = (rng.random_range(0..=h - s), rng.random_range(0..=w - s));
            if targets.iter().chain(&sources).chain(&object_sources).any(|&o| blocks_overlap(t, o, s, 1)) {
                continue;
            }
            let src = match object_sources.get(k) {
                Some(&o) => o,
                None => (rng.random_range(0..=h - s), rng.random_range(0..=w - s)),
            };
            if blocks_overlap(t, src, s, 1) || targets.iter().any(|&o| blocks_overlap(src, o, s, 1)) {
                continue;
            }
            // Source must be a single material absent from the target block.
            let src_mat = labels2[src.0 * w + src.1];
            let uniform = (0..s).all(|i| (0..s).all(|j| labels2[(src.0 + i) * w + src.1 + j] == src_mat));
            let foreign = (0..s).all(|i| (0..s).all(|j| labels2[(t.0 + i) * w + t.1 + j] != src_mat));
            if !uniform || !foreign {
                continue;
            }
            targets.push(t);
            sources.push(src);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::contract(
                "synth_bitemporal",
                format!("could not place anomaly {} of {}", k + 1, cfg.anomaly_count),
            ));
        }
    }
    let snapshot = x2.data.clone();
    for (&t, &src) in targets.iter().zip(&sources) {
        for i in 0..s {
            for j in 0..s {
                let dst = ((t.0 + i) * w + t.1 + j) * c;
                let from = ((src.0 + i) * w + src.1 + j) * c;
                x2.data[dst..dst + c].copy_from_slice(&snapshot[from..from + c]);
                truth.labels[(t.0 + i) * w + t.1 + j] = Label::Changed;
            }
        }
    }

    Ok(SynthScene { x1, x2: x2.cast(), truth, materials })
}
