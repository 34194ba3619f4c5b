//! Multi-task action parsing in videos.
//!
//! A four-head spatio-temporal convolutional network predicts, for a clip,
//! the offset of the action centre, the action category and two levels of
//! binary motion attributes. Around it sit the appearance-motion
//! preprocessing (intensity plus dense optical flow), a procedural
//! sprite-action data generator with augmentation, proposal-based parsing of
//! long videos and detection/attribute evaluation.

pub mod checks;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Shape, Tensor};
