//! The late-fusion 1D-CNN regressor.
//!
//! Each feature branch runs a single-channel valid convolution along its
//! feature axis, ReLU, and a global max-pool, giving `conv_filters` values per
//! branch. The pooled blocks are concatenated in config branch order and fed
//! through ReLU hidden layers (with inverted dropout in training) to a linear
//! scalar head.

mod adam;
mod backprop;
mod layers;
mod model;

use thiserror::Error;

pub use adam::{AdamConfig, AdamState};
pub use backprop::{loss_and_gradients, ForwardTrace};
pub use layers::{conv1d, conv1d_linear, dropout, dropout_mask, global_max_pool, mse_loss, Mode};
pub use model::{BranchSpec, ConvParams, DenseParams, FusionModel, ModelConfig, Parameters};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("invalid model configuration: {0}")]
    BadConfig(&'static str),
    #[error("input of length {len} is shorter than the kernel ({kernel})")]
    InputTooShort { len: usize, kernel: usize },
    #[error("dropout probability {0} outside [0, 1)")]
    BadProbability(f64),
    #[error("empty batch")]
    EmptyBatch,
    #[error("prediction and target batches differ in length")]
    LengthMismatch,
    #[error("inputs do not match the model branches: {0}")]
    BranchMismatch(&'static str),
    #[error("parameter and gradient shapes differ")]
    ShapeMismatch,
}
