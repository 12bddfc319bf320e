//! Reverse-mode automatic differentiation over whole-image tensors.
//!
//! A [`Graph`] records every operation in execution order. [`Graph::backward`]
//! replays the record in reverse and accumulates gradients into the leaves.

mod conv;
mod graph;
mod ops;

pub use graph::{Graph, Var};
pub use ops::{BnState, Mode, PoolAxis, PoolKind, COSINE_EPS};
