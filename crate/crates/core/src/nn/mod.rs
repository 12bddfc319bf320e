//! Parameters, layers, initialization and optimization on top of [`crate::autograd`].

mod gradcheck;
mod init;
mod layers;
mod optim;
mod params;

pub use gradcheck::{check_gradients, GradCheck};
pub use init::he_normal;
pub use layers::{BatchNorm, Conv};
pub use optim::{cosine_lr, sgd_update, SgdState};
pub use params::{BnId, ParamId, ParamStore, Session};
