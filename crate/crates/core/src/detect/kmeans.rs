use crate::scalar::Scalar;

use super::{BinaryChangeMap, ChangeScoreMap};

pub const MAX_ITERATIONS: usize = 100;

/// Result of a one-dimensional two-cluster K-means.
#[derive(Clone, Debug, PartialEq)]
pub struct Kmeans2<T> {
    /// `(low, high)` cluster centroids.
    pub centroids: (T, T),
    /// `true` where a value joined the high cluster.
    pub high: Vec<bool>,
    pub iterations: usize,
}

/// Lloyd iterations with k = 2, seeded at the minimum and maximum value.
/// Stops at an assignment fixpoint or after [`MAX_ITERATIONS`]. Equidistant
/// values go to the low cluster. All-equal input yields a single low cluster.
pub fn kmeans2<T: Scalar>(values: &[T]) -> Kmeans2<T> {
    let lo = values.iter().fold(T::infinity(), |a, &b| a.min(b));
    let hi = values.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    if values.is_empty() || !(hi > lo) {
        let c = if values.is_empty() { T::zero() } else { lo };
        return Kmeans2 { centroids: (c, c), high: vec![false; values.len()], iterations: 0 };
    }
    let (mut c0, mut c1) = (lo, hi);
    let mut high = vec![false; values.len()];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        for (h, &v) in high.iter_mut().zip(values) {
            let to_high = (v - c1).abs() < (v - c0).abs();
            if to_high != *h {
                *h = to_high;
                changed = true;
            }
        }
        let (mut s0, mut n0, mut s1, mut n1) = (T::zero(), 0usize, T::zero(), 0usize);
        for (&h, &v) in high.iter().zip(values) {
            if h {
                s1 += v;
                n1 += 1;
            } else {
                s0 += v;
                n0 += 1;
            }
        }
        if n0 > 0 {
            c0 = s0 / T::count(n0);
        }
        if n1 > 0 {
            c1 = s1 / T::count(n1);
        }
        if !changed {
            break;
        }
    }
    Kmeans2 { centroids: (c0, c1), high, iterations }
}

/// Labels the high-centroid cluster of a score map as changed.
pub fn kmeans2_threshold<T: Scalar>(scores: &ChangeScoreMap<T>) -> BinaryChangeMap {
    let km = kmeans2(&scores.scores);
    BinaryChangeMap { height: scores.height, width: scores.width, changed: km.high }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_lloyd_example() {
        let km = kmeans2(&[0.1f64, 0.2, 0.9, 1.0]);
        assert_eq!(km.high, vec![false, false, true, true]);
        assert!((km.centroids.0 - 0.15).abs() < 1e-12);
        assert!((km.centroids.1 - 0.95).abs() < 1e-12);
    }

    #[test]
    fn constant_scores_are_unchanged() {
        let map = ChangeScoreMap::new(2, 2, vec![0.4f64; 4]).unwrap();
        assert_eq!(kmeans2_threshold(&map).changed_count(), 0);
    }

    #[test]
    fn positive_affine_invariance() {
        let v = [0.3f64, 2.0, 0.1, 5.5, 4.9, 0.8, 6.1];
        let t: Vec<f64> = v.iter().map(|x| 3.0 * x - 7.0).collect();
        assert_eq!(kmeans2(&v).high, kmeans2(&t).high);
    }
}
