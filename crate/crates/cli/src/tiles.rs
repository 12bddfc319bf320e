//! Horizontal strips. Each strip runs pre-detection, training and detection on
//! its own; the per-strip maps are stitched back before thresholding and
//! evaluation.

use std::ops::Range;

use hyperchange::detect::ChangeScoreMap;
use hyperchange::training::PseudoMask;

use crate::error::{CliError, CliResult};

/// `tiles` row ranges of near-equal height covering `0..height`.
pub fn strips(height: usize, tiles: usize) -> CliResult<Vec<Range<usize>>> {
    if tiles == 0 || tiles > height {
        return Err(CliError::config(format!("tile: {tiles} strips do not fit an image {height} rows high")));
    }
    Ok((0..tiles).map(|k| k * height / tiles..(k + 1) * height / tiles).collect())
}

pub fn stitch_scores(parts: Vec<ChangeScoreMap<f64>>) -> CliResult<ChangeScoreMap<f64>> {
    let width = parts.first().map_or(0, |p| p.width);
    let height = parts.iter().map(|p| p.height).sum();
    let scores = parts.into_iter().flat_map(|p| p.scores).collect();
    Ok(ChangeScoreMap::new(height, width, scores)?)
}

pub fn stitch_masks(parts: &[PseudoMask]) -> CliResult<PseudoMask> {
    let width = parts.first().map_or(0, |p| p.width());
    let height = parts.iter().map(|p| p.height()).sum();
    let selected = parts.iter().flat_map(|p| p.selected().iter().copied()).collect();
    Ok(PseudoMask::new(height, width, selected)?)
}

pub fn mask_rows(mask: &PseudoMask, rows: Range<usize>) -> CliResult<PseudoMask> {
    let w = mask.width();
    let selected = mask.selected()[rows.start * w..rows.end * w].to_vec();
    Ok(PseudoMask::new(rows.len(), w, selected)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_cover_rows_in_order() {
        let s = strips(7, 3).unwrap();
        assert_eq!(s, vec![0..2, 2..4, 4..7]);
        assert_eq!(strips(5, 1).unwrap(), vec![0..5]);
        assert!(strips(2, 3).is_err());
    }

    #[test]
    fn stitching_inverts_splitting() {
        let selected: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let mask = PseudoMask::new(5, 4, selected).unwrap();
        let parts: Vec<PseudoMask> = strips(5, 2).unwrap().into_iter().map(|r| mask_rows(&mask, r).unwrap()).collect();
        assert_eq!(stitch_masks(&parts).unwrap(), mask);

        let a = ChangeScoreMap::new(1, 2, vec![1.0, 2.0]).unwrap();
        let b = ChangeScoreMap::new(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let joined = stitch_scores(vec![a, b]).unwrap();
        assert_eq!((joined.height, joined.width), (3, 2));
        assert_eq!(joined.scores, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }
}
