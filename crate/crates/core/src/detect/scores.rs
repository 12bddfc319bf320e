use crate::autograd::COSINE_EPS;
use crate::error::{Error, Result};
use crate::io::HsiCube;
use crate::scalar::Scalar;

use super::ChangeScoreMap;

fn check(op: &'static str, a: &HsiCube<impl Scalar>, b: &HsiCube<impl Scalar>) -> Result<()> {
    if (a.height, a.width, a.bands) != (b.height, b.width, b.bands) {
        return Err(Error::shape(
            op,
            format!("{}x{}x{} vs {}x{}x{}", a.height, a.width, a.bands, b.height, b.width, b.bands),
        ));
    }
    Ok(())
}

/// Change vector analysis: Euclidean norm of each pixel's spectral difference.
pub fn cva_magnitude<T: Scalar>(x1: &HsiCube<T>, x2: &HsiCube<T>) -> Result<ChangeScoreMap<T>> {
    check("cva_magnitude", x1, x2)?;
    let scores = x1
        .pixels()
        .zip(x2.pixels())
        .map(|(a, b)| a.iter().zip(b).map(|(&u, &v)| (v - u) * (v - u)).sum::<T>().sqrt())
        .collect();
    ChangeScoreMap::new(x1.height, x1.width, scores)
}

/// Per-pixel cosine distance `1 - cos(f1, f2)` in [0, 2].
pub fn cosine_distance_map<T: Scalar>(f1: &HsiCube<T>, f2: &HsiCube<T>) -> Result<ChangeScoreMap<T>> {
    check("cosine_distance_map", f1, f2)?;
    let eps = T::lit(COSINE_EPS);
    let scores = f1
        .pixels()
        .zip(f2.pixels())
        .map(|(a, b)| {
            let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
            for (&u, &v) in a.iter().zip(b) {
                dot += u * v;
                na += u * u;
                nb += v * v;
            }
            // One square root of the product: identical vectors give exactly 1.
            let cos = dot / (na * nb).sqrt().max(eps * eps);
            (T::one() - cos).max(T::zero()).min(T::lit(2.0))
        })
        .collect();
    ChangeScoreMap::new(f1.height, f1.width, scores)
}
