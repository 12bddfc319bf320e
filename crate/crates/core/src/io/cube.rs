use std::ops::Range;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Hyperspectral image: `height x width` pixels of `bands` values each, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HsiCube<T> {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub data: Vec<T>,
    pub wavelengths: Option<Vec<f64>>,
}

impl<T: Scalar> HsiCube<T> {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::contract(
                "cube",
                format!("dimensions must be positive, got {}x{}x{}", height, width, bands),
            ));
        }
        if data.len() != height * width * bands {
            return Err(Error::shape(
                "cube",
                format!("{}x{}x{} cube with {} values", height, width, bands, data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("cube", "values must be finite"));
        }
        Ok(HsiCube { height, width, bands, data, wavelengths: None })
    }

    pub fn with_wavelengths(mut self, wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.len() != self.bands {
            return Err(Error::shape(
                "cube",
                format!("{} wavelengths for {} bands", wavelengths.len(), self.bands),
            ));
        }
        self.wavelengths = Some(wavelengths);
        Ok(self)
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[T] {
        let i = (row * self.width + col) * self.bands;
        &self.data[i..i + self.bands]
    }

    pub fn pixels(&self) -> std::slice::Chunks<'_, T> {
        self.data.chunks(self.bands)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.height, self.width, self.bands) == (other.height, other.width, other.bands)
    }

    /// `[1, H, W, C]` tensor view of the cube.
    pub fn to_tensor(&self) -> Tensor<T> {
        Tensor::image(self.height, self.width, self.bands, self.data.clone()).expect("cube shape")
    }

    pub fn from_tensor(t: &Tensor<T>) -> Result<Self> {
        let (h, w, c) = t.hwc("cube")?;
        Self::new(h, w, c, t.data().to_vec())
    }

    /// Each band min-max scaled to [0, 1] independently; constant bands become 0.
    pub fn normalize(&self) -> Self {
        let c = self.bands;
        let mut lo = vec![T::infinity(); c];
        let mut hi = vec![T::neg_infinity(); c];
        for px in self.pixels() {
            for b in 0..c {
                lo[b] = lo[b].min(px[b]);
                hi[b] = hi[b].max(px[b]);
            }
        }
        let mut data = Vec::with_capacity(self.data.len());
        for px in self.pixels() {
            for b in 0..c {
                let range = hi[b] - lo[b];
                data.push(if range > T::zero() { (px[b] - lo[b]) / range } else { T::zero() });
            }
        }
        HsiCube { data, ..self.clone() }
    }

    /// Horizontal strip covering `rows`.
    pub fn rows(&self, rows: Range<usize>) -> Self {
        let stride = self.width * self.bands;
        let data = self.data[rows.start * stride..rows.end * stride].to_vec();
        HsiCube { height: rows.len(), data, ..self.clone() }
    }

    pub fn cast<U: Scalar>(&self) -> HsiCube<U> {
        HsiCube {
            height: self.height,
            width: self.width,
            bands: self.bands,
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
            wavelengths: self.wavelengths.clone(),
        }
    }
}
