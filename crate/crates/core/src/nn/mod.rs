//! Minimal neural-network engine with explicit backpropagation.
//!
//! Hosts the two radar-to-communication models: a fully convolutional
//! APS-to-APS network and a fully connected covariance-column network, with
//! their losses, Adam and early-stopped training.

pub mod layers;
pub mod loss;
pub mod network;
pub mod tensor;
pub mod train;

pub use layers::{layer_backward, layer_forward, Cache, LayerSpec};
pub use loss::{col_aps_loss, mse_loss, ColApsOperator};
pub use network::{aps_net, aps_net_apply, col_net, col_net_apply, ModelKind, NetworkParams};
pub use tensor::Tensor;
pub use train::{
    adam_step, evaluate, grad_check, train, AdamState, EpochRecord, Objective, Samples, TrainConfig, TrainOutcome,
};
