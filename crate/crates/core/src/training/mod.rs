//! Self-supervised training: pseudo-mask selection of presumed-unchanged
//! pixels, the focal cosine objective and the whole-image training loop.

mod loss;
mod mask;
mod train;

pub use loss::{focal_cosine, focal_of_cosine, focal_value, pair_loss, plain_cosine, plain_value, symmetric_loss, total_loss, LossKind};
pub use mask::{build_pseudo_mask, PseudoMask};
pub use train::{train, train_with, EpochRecord, LossReport, Predetector, TrainConfig};
