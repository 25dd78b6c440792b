//! A small convolutional network engine: 4-d tensors, Conv2D, transposed
//! Conv2D, MaxPool2D and Tanh with hand-written backward passes, plus Adam.
//!
//! Everything is generic over [`Real`] so the same code runs in `f32` for
//! training and `f64` for gradient checks.

pub mod activation;
pub mod adam;
pub mod conv;
pub mod error;
mod im2col;
pub mod init;
pub mod pool;
pub mod scalar;
pub mod shape;
pub mod tensor;

pub use activation::{tanh_backward, tanh_forward};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{
    conv2d_backward, conv2d_backward_with, conv2d_forward, tconv2d_backward, tconv2d_backward_with, tconv2d_forward,
    Conv2d, ConvGrads, Needs, TConv2d,
};
pub use error::{NnError, Result};
pub use init::uniform_init;
pub use pool::{maxpool2d_backward, maxpool2d_forward, MaxPool2d, PoolCache};
pub use scalar::Real;
pub use shape::{chain_sizes, conv_out_size, pool_out_size, tconv_out_size, ConvSpec, PoolSpec, Stage};
pub use tensor::Tensor4;
