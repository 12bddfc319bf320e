//! Binary (P5) 8-bit PGM for label maps, pseudo masks and score previews.
//!
//! Label maps use 0 = unchanged, 255 = changed, 128 = unlabeled; any other
//! gray level is rejected. Pseudo masks use 255 = selected, 0 = not selected.

use std::fs;
use std::path::Path;

use crate::detect::{BinaryChangeMap, ChangeScoreMap, Label, LabelMap};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::training::PseudoMask;

pub const UNCHANGED: u8 = 0;
pub const UNLABELED: u8 = 128;
pub const CHANGED: u8 = 255;

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Parses a P5 image with maxval 255, returning `(width, height, pixels)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let mut token = |name: &str| -> Result<String> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::parse(name, "unexpected end of header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token("magic")?;
    if magic != "P5" {
        return Err(Error::parse("magic", format!("expected P5, found {magic:?}")));
    }
    let num = |s: String, name: &str| {
        s.parse::<usize>().map_err(|_| Error::parse(name, format!("not a number: {s:?}")))
    };
    let width = num(token("width")?, "width")?;
    let height = num(token("height")?, "height")?;
    let maxval = num(token("maxval")?, "maxval")?;
    if maxval != 255 {
        return Err(Error::parse("maxval", format!("expected 255, found {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = pos + 1;
    let raster = bytes
        .get(start..start + width * height)
        .ok_or_else(|| Error::parse("raster", "truncated pixel data"))?;
    Ok((width, height, raster.to_vec()))
}

fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    decode_pgm(&fs::read(path)?)
}

fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    fs::write(path, encode_pgm(width, height, pixels))?;
    Ok(())
}

pub fn label_to_gray(l: Label) -> u8 {
    match l {
        Label::Unchanged => UNCHANGED,
        Label::Changed => CHANGED,
        Label::Unlabeled => UNLABELED,
    }
}

pub fn gray_to_label(g: u8) -> Result<Label> {
    match g {
        UNCHANGED => Ok(Label::Unchanged),
        CHANGED => Ok(Label::Changed),
        UNLABELED => Ok(Label::Unlabeled),
        other => Err(Error::parse("raster", format!("gray level {other} is not a label"))),
    }
}

pub fn write_mask(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let px: Vec<u8> = map.labels.iter().map(|&l| label_to_gray(l)).collect();
    write_pgm(path, map.width, map.height, &px)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<LabelMap> {
    let (w, h, px) = read_pgm(path)?;
    let labels = px.into_iter().map(gray_to_label).collect::<Result<Vec<_>>>()?;
    LabelMap::new(h, w, labels)
}

pub fn write_binary_map(map: &BinaryChangeMap, path: impl AsRef<Path>) -> Result<()> {
    write_mask(&LabelMap::from_binary(map), path)
}

/// Reads a two-level label PGM (no unlabeled cells) as a binary change map.
pub fn read_binary_map(path: impl AsRef<Path>) -> Result<BinaryChangeMap> {
    let labels = read_mask(path)?;
    let changed = labels
        .labels
        .iter()
        .map(|&l| match l {
            Label::Changed => Ok(true),
            Label::Unchanged => Ok(false),
            Label::Unlabeled => Err(Error::parse("raster", "binary map contains unlabeled cells")),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinaryChangeMap { height: labels.height, width: labels.width, changed })
}

pub fn write_pseudo_mask(mask: &PseudoMask, path: impl AsRef<Path>) -> Result<()> {
    let px: Vec<u8> = mask.selected().iter().map(|&s| if s { 255 } else { 0 }).collect();
    write_pgm(path, mask.width(), mask.height(), &px)
}

pub fn read_pseudo_mask(path: impl AsRef<Path>) -> Result<PseudoMask> {
    let (w, h, px) = read_pgm(path)?;
    let selected = px
        .into_iter()
        .map(|g| match g {
            255 => Ok(true),
            0 => Ok(false),
            other => Err(Error::parse("raster", format!("gray level {other} in pseudo mask"))),
        })
        .collect::<Result<Vec<_>>>()?;
    PseudoMask::new(h, w, selected)
}

/// Min-max scales scores to 0..=255 for viewing; a constant map is all black.
pub fn write_score_pgm<T: Scalar>(map: &ChangeScoreMap<T>, path: impl AsRef<Path>) -> Result<()> {
    let lo = map.scores.iter().fold(T::infinity(), |a, &b| a.min(b));
    let hi = map.scores.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let range = hi - lo;
    let px: Vec<u8> = map
        .scores
        .iter()
        .map(|&s| {
            if range > T::zero() {
                ((s - lo) / range * T::lit(255.0)).round().as_f64() as u8
            } else {
                0
            }
        })
        .collect();
    write_pgm(path, map.width, map.height, &px)
}
