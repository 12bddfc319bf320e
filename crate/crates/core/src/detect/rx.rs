use crate::error::{Error, Result};
use crate::io::HsiCube;
use crate::scalar::Scalar;

use super::ChangeScoreMap;

/// Relative ridge added to the covariance diagonal, scaled by the mean
/// per-channel variance.
pub const RX_RIDGE: f64 = 1e-6;
/// Absolute floor inside the ridge so that an all-zero covariance stays invertible.
pub const RX_RIDGE_FLOOR: f64 = 1e-12;

/// Global RX anomaly model: sample mean and Cholesky factor of the
/// regularized `1/N` sample covariance.
#[derive(Clone, Debug)]
pub struct RxModel<T> {
    mean: Vec<T>,
    /// Lower-triangular factor, row-major `dim x dim`.
    chol: Vec<T>,
    dim: usize,
}

impl<T: Scalar> RxModel<T> {
    /// Fits the model to `pixels`, each a vector of `dim` values, stored back to back.
    pub fn fit(pixels: &[T], dim: usize) -> Result<Self> {
        if dim == 0 || pixels.len() % dim != 0 {
            return Err(Error::shape("rx", format!("{} values do not split into {}-vectors", pixels.len(), dim)));
        }
        let n = pixels.len() / dim;
        if n < 2 {
            return Err(Error::contract("rx", format!("need at least 2 pixels, got {n}")));
        }
        let nt = T::count(n);
        let mut mean = vec![T::zero(); dim];
        for px in pixels.chunks(dim) {
            for (m, &v) in mean.iter_mut().zip(px) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / nt);

        let mut cov = vec![T::zero(); dim * dim];
        let mut centered = vec![T::zero(); dim];
        for px in pixels.chunks(dim) {
            for ((c, &v), &m) in centered.iter_mut().zip(px).zip(&mean) {
                *c = v - m;
            }
            for i in 0..dim {
                let ci = centered[i];
                for j in 0..=i {
                    cov[i * dim + j] += ci * centered[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..=i {
                let v = cov[i * dim + j] / nt;
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }
        let trace: T = (0..dim).map(|i| cov[i * dim + i]).sum();
        let ridge = T::lit(RX_RIDGE) * (trace / T::count(dim) + T::lit(RX_RIDGE_FLOOR));
        for i in 0..dim {
            cov[i * dim + i] += ridge;
        }
        let chol = cholesky(&cov, dim)
            .ok_or_else(|| Error::contract("rx", "covariance is not positive definite"))?;
        Ok(RxModel { mean, chol, dim })
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// Mahalanobis distance `(x - mu)^T Sigma^-1 (x - mu)`.
    pub fn score(&self, query: &[T]) -> Result<T> {
        if query.len() != self.dim {
            return Err(Error::shape("rx", format!("query has {} channels, model {}", query.len(), self.dim)));
        }
        // Forward substitution L y = x - mu; the distance is |y|^2.
        let d = self.dim;
        let mut y = vec![T::zero(); d];
        for i in 0..d {
            let mut s = query[i] - self.mean[i];
            for k in 0..i {
                s -= self.chol[i * d + k] * y[k];
            }
            y[i] = s / self.chol[i * d + i];
        }
        Ok(y.iter().map(|&v| v * v).sum())
    }
}

fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// RX score of `query` against the statistics of `pixels` (back-to-back `dim`-vectors).
pub fn rx_score<T: Scalar>(pixels: &[T], dim: usize, query: &[T]) -> Result<T> {
    RxModel::fit(pixels, dim)?.score(query)
}

/// RX applied to every pixel of the difference image `x2 - x1`, with
/// statistics taken from the whole difference image.
pub fn diff_rx<T: Scalar>(x1: &HsiCube<T>, x2: &HsiCube<T>) -> Result<ChangeScoreMap<T>> {
    if !x1.same_shape(x2) {
        return Err(Error::shape(
            "diff_rx",
            format!("{}x{}x{} vs {}x{}x{}", x1.height, x1.width, x1.bands, x2.height, x2.width, x2.bands),
        ));
    }
    let diff: Vec<T> = x2.data.iter().zip(&x1.data).map(|(&b, &a)| b - a).collect();
    let model = RxModel::fit(&diff, x1.bands)?;
    let scores = diff.chunks(x1.bands).map(|px| model.score(px)).collect::<Result<Vec<_>>>()?;
    ChangeScoreMap::new(x1.height, x1.width, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_pattern() {
        let pixels = [1.0f64, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0];
        let s = rx_score(&pixels, 2, &[1.0, 0.0]).unwrap();
        // Sigma = diag(0.5, 0.5) up to the ridge.
        assert!((s - 2.0).abs() < 1e-5, "{s}");
        assert_eq!(rx_score(&pixels, 2, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn isotropic_data_is_scaled_euclidean() {
        // Four points of a square: diagonal covariance var = 4 per axis.
        let pixels = [2.0f64, 2.0, -2.0, 2.0, 2.0, -2.0, -2.0, -2.0];
        let q = [1.0, 3.0];
        let s = rx_score(&pixels, 2, &q).unwrap();
        assert!((s - (1.0 + 9.0) / 4.0).abs() < 1e-5);
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let pixels = [1.0f64, 0.0, -1.0, 0.0];
        assert!(rx_score(&pixels, 2, &[1.0]).is_err());
        assert!(rx_score(&[1.0f64, 2.0], 2, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn identical_cubes_give_zero_scores() {
        let data: Vec<f64> = (0..4 * 5 * 3).map(|i| (i as f64 * 0.7).sin()).collect();
        let x = HsiCube::new(4, 5, 3, data).unwrap();
        let m = diff_rx(&x, &x).unwrap();
        assert!(m.scores.iter().all(|&s| s == 0.0));
    }
}
