//! Convolutional denoising autoencoder that maps a corrupted (non-PSD)
//! matrix with the right marginals to a nearby physical state.
//!
//! - [`NetworkSpec`] / [`Network`]: architecture for `N ≥ 3` qubits and width
//!   scale `S`, forward and backward passes.
//! - [`reconstruction_loss`]: polar-factor and marginal-matching loss with its
//!   analytic gradient.
//! - [`train`], [`transfer`], [`infer`] and the [`Checkpoint`] file format.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod infer;
pub mod loss;
pub mod network;
pub mod spec;
pub mod train;
pub mod transfer;

pub use checkpoint::{Checkpoint, CheckpointHeader, TrainingMeta};
pub use data::{Example, TrainingData};
pub use error::{CdaeError, Result};
pub use infer::{clean_output, infer, infer_batch, Reconstruction};
pub use loss::{reconstruction_loss, LossTerms, LossVariant, POLAR_EPS};
pub use network::{ForwardCache, Gradients, Network, ParamLayer};
pub use spec::{Layer, NetworkSpec, ParamKind, NUM_PARAM_LAYERS};
pub use train::{
    batch_loss_and_grad, evaluate_loss, stack_inputs, train, EpochStats, TrainConfig, TrainEvent, TrainOutcome,
};
pub use transfer::{transfer, TransferPolicy};
