//! Self-supervised siamese change detection for bi-temporal hyperspectral
//! images: a small reverse-mode autograd engine, the spatial/spectral attention
//! network with projector and predictor heads, focal-cosine training on
//! pseudo-masked pixel pairs, classical detectors and evaluation metrics.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below name the concrete instantiations.

pub mod autograd;
pub mod detect;
pub mod error;
pub mod io;
pub mod model;
pub mod nn;
pub mod scalar;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type TensorF64 = Tensor<f64>;
pub type TensorF32 = Tensor<f32>;
pub type GraphF64 = autograd::Graph<f64>;
pub type GraphF32 = autograd::Graph<f32>;
pub type HsiCubeF64 = io::HsiCube<f64>;
pub type HsiCubeF32 = io::HsiCube<f32>;
pub type HyperNetF64 = model::HyperNet<f64>;
pub type HyperNetF32 = model::HyperNet<f32>;
pub type ChangeScoreMapF64 = detect::ChangeScoreMap<f64>;
pub type ChangeScoreMapF32 = detect::ChangeScoreMap<f32>;
