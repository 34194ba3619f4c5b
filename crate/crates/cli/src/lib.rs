//! Pipeline stages and configuration behind the `actparse` executable.

pub mod config;
pub mod images;
pub mod pipeline;

pub use config::{Profile, RunConfig};
