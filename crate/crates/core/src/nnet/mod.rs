//! Deterministic feed-forward networks.

mod dense;
mod gradcheck;
mod optim;
pub(crate) mod train;

pub use dense::{Activation, DenseLayer, DenseNet, Loss};
pub use gradcheck::{finite_diff_check, relative_error, GRADIENT_FLOOR};
pub use optim::{Optimizer, OptimizerKind};
pub use train::{mlp_train, mlp_train_with_loss, EarlyStop, EpochRecord, Monitor, TrainConfig, TrainHistory};
