//! Fully connected ReLU networks, their training, and the restricted class.

pub mod checkpoint;
pub mod network;
pub mod project;
pub mod train;

pub use checkpoint::Checkpoint;
pub use network::{backward, loss, Gradient, InputTransform, Layer, Network};
pub use project::{max_row_l1, project_restricted};
pub use train::{train, train_from, Architecture, Optimizer, Regularization, TrainConfig};
