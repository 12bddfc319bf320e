//! Brute-force reference implementations.

/// `P(s_changed > s_unchanged) + 0.5 P(equal)` over all changed/unchanged pairs.
pub fn pairwise_auc(scores: &[f64], changed: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !changed[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if changed[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Globally optimal 1-D 2-means split by trying every threshold between
/// consecutive sorted values; `true` marks the high cluster.
pub fn exhaustive_two_means(values: &[f64]) -> Vec<bool> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sse = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    let mut best: Option<(f64, f64)> = None;
    for k in 1..sorted.len() {
        if sorted[k] == sorted[k - 1] {
            continue;
        }
        let cost = sse(&sorted[..k]) + sse(&sorted[k..]);
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, sorted[k]));
        }
    }
    match best {
        Some((_, cut)) => values.iter().map(|&v| v >= cut).collect(),
        None => vec![false; values.len()],
    }
}

/// Unregularized Mahalanobis distance with `1/N` covariance, solved by
/// Gaussian elimination with partial pivoting.
pub fn exact_rx(pixels: &[f64], dim: usize, query: &[f64]) -> f64 {
    let n = pixels.len() / dim;
    let mean: Vec<f64> = (0..dim).map(|j| pixels.chunks(dim).map(|p| p[j]).sum::<f64>() / n as f64).collect();
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for p in pixels.chunks(dim) {
        for i in 0..dim {
            for j in 0..dim {
                a[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / n as f64;
            }
        }
    }
    let d: Vec<f64> = query.iter().zip(&mean).map(|(q, m)| q - m).collect();
    for i in 0..dim {
        a[i][dim] = d[i];
    }
    for col in 0..dim {
        let piv = (col..dim).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for row in 0..dim {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=dim {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..dim).map(|i| d[i] * a[i][dim] / a[i][i]).sum()
}
