//! Synthetic action data.
//!
//! Articulated stick figures perform parameterized motion programs over
//! simple backgrounds. Category and attribute labels are computed from the
//! generator parameters, never from pixels. On top of the renderer sit the
//! five-crop augmentation, multi-action composite videos and tab-separated
//! dataset manifests.

pub mod action;
pub mod augment;
pub mod dataset;
pub mod geometry;
pub mod manifest;
pub mod samples;
pub mod sprite;
pub mod synth;

pub use action::{attributes, ActionSpec, Character, MotionProgram, H1_NAMES, H2_NAMES};
pub use augment::{augment, crop5, crop_offsets, crop_region, AugmentParams, SubClip};
pub use dataset::{synthesize_clip_set, synthesize_video_set, ClipSetConfig, VideoSetConfig};
pub use geometry::{iou_3d, Cuboid};
pub use manifest::{build_manifest, split_entries, DatasetManifest, ManifestEntry, Split};
pub use samples::{prepare_clip, target_from_annotation, InputMode, TensorDataset};
pub use synth::{compose_multiaction_video, render_background, synth_action_clip, ActionAnnotation, Background, Placement};
