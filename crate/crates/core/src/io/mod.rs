//! Cube and label persistence, normalization and synthetic scene generation.

mod cube;
pub mod hcube;
pub mod pgm;
pub mod synth;

pub use cube::HsiCube;
pub use hcube::{read_hcube, read_scores, write_hcube, write_scores, HcubeHeader, HcubeRecord};
pub use pgm::{read_binary_map, read_mask, read_pseudo_mask, write_binary_map, write_mask, write_pseudo_mask, write_score_pgm};
pub use synth::{gaussian_lowpass, shift_image, synth_bitemporal, SynthConfig, SynthScene};
