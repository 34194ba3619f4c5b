//! Differentiable layer primitives, losses and the optimizer.

pub mod activation;
pub mod conv;
mod gemm;
pub mod linear;
pub mod loss;
pub mod optim;
pub mod params;
pub mod pool;

pub use activation::{relu_backward, relu_forward, sigmoid, softmax};
pub use conv::{conv3d_backward, conv3d_backward_params, conv3d_forward, Conv3DSpec};
pub use linear::{fc_backward, fc_forward};
pub use loss::{bbox_euclidean_loss, multilabel_cross_entropy, softmax_cross_entropy, PROB_EPS};
pub use optim::{lr_schedule, sgd_momentum_step, OptimizerConfig};
pub use params::LayerParams;
pub use pool::{maxpool3d_backward, maxpool3d_forward};
