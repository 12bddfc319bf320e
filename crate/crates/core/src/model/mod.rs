//! The siamese change-detection network: a spatial branch of residual
//! spatial-attention blocks, a spectral branch of residual channel-attention
//! blocks, fusion, and the projector / predictor heads.

mod attention;
mod blocks;
mod checkpoint;
mod config;
mod hypernet;

pub use attention::{ChannelAttention, SpatialAttention};
pub use blocks::{Fusion, Predictor, Projector, Rcab, Rsab};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{Ablation, ModelConfig};
pub use hypernet::{HyperNet, Layers, SiameseOutput, SiameseVars};
