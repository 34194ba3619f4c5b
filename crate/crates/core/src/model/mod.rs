//! The multi-task network, its loss, training loop and persistence.

pub mod checkpoint;
pub mod config;
pub mod net;
pub mod svd;
pub mod train;

pub use checkpoint::Checkpoint;
pub use config::{LayerShape, LocMode, ModelConfig, NUM_H1, NUM_H2};
pub use net::{joint_loss, ActionNet, LossBreakdown, LossWeights, ModelOutput, Target};
pub use svd::svd_compress_fc;
pub use train::{prepare_finetune, train, LossLog, SampleSource, StepRecord, TrainObserver, TrainOptions};
