//! Small dense networks on two-dimensional inputs, trained with AdamW.

pub mod loss;
pub mod mlp;
pub mod optim;
pub mod train;

pub use loss::{Conflictual, CrossEntropy, DirichletOutput, Evidential, Objective};
pub use mlp::{DropoutMasks, MlpConfig, NetworkSize, NetworkWeights};
pub use optim::{AdamW, AdamWConfig};
pub use train::{batch_size_for, train, validation_loss, TrainConfig, TrainOutcome};
