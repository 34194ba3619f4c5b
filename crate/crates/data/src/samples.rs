//! Network-ready samples: clips turned into fixed-size appearance-motion
//! tensors with their supervision.

use std::path::Path;

use actparse_core::model::{LocMode, SampleSource, Target};
use actparse_core::{Error, Result, Tensor};
use actparse_motion::{compose, compose_gray_only, warp_clip, FlowParams, VideoClip};

use crate::manifest::{resolve, DatasetManifest};
use crate::synth::ActionAnnotation;

/// Which channels the network sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputMode {
    /// Intensity plus optical flow.
    AppearanceMotion(FlowParams),
    /// Intensity only; the flow channels are zero.
    GrayOnly,
}

/// Composes and warps a raw clip into a `(3, T, H, W)` input tensor.
pub fn prepare_clip(clip: &VideoClip, mode: InputMode, extents: [usize; 3]) -> Result<Tensor> {
    let am = match mode {
        InputMode::AppearanceMotion(flow) => compose(clip, &flow)?,
        InputMode::GrayOnly => compose_gray_only(clip)?,
    };
    Ok(warp_clip(&am, extents)?.into_volume())
}

/// Supervision for a clip of `clip_size = (W, H)` pixels. In raw-pixel mode
/// the normalized location target is scaled back to pixels of that clip.
pub fn target_from_annotation(a: &ActionAnnotation, mode: LocMode, clip_size: (usize, usize)) -> Target {
    let (sx, sy) = match mode {
        LocMode::Normalized => (1.0, 1.0),
        LocMode::RawPixels => (clip_size.0 as f64, clip_size.1 as f64),
    };
    Target {
        category: a.category_id,
        h1: a.h1.to_vec(),
        h2: a.h2.to_vec(),
        loc: [(a.loc_target[0] * sx) as f32, (a.loc_target[1] * sy) as f32],
    }
}

/// Samples held in memory.
#[derive(Debug, Clone, Default)]
pub struct TensorDataset {
    pub inputs: Vec<Tensor>,
    pub targets: Vec<Target>,
}

impl TensorDataset {
    pub fn push(&mut self, input: Tensor, target: Target) {
        self.inputs.push(input);
        self.targets.push(target);
    }

    /// Loads and prepares every clip of a manifest.
    pub fn from_manifest(manifest_path: &Path, mode: InputMode, loc_mode: LocMode, extents: [usize; 3]) -> Result<Self> {
        let manifest = DatasetManifest::read(manifest_path)?;
        if manifest.entries.is_empty() {
            return Err(Error::Data(format!("manifest {} is empty", manifest_path.display())));
        }
        let mut out = TensorDataset::default();
        for e in &manifest.entries {
            let clip = VideoClip::load(&resolve(manifest_path, e))?;
            let target = target_from_annotation(&e.annotation, loc_mode, (clip.width(), clip.height()));
            out.push(prepare_clip(&clip, mode, extents)?, target);
        }
        Ok(out)
    }
}

impl SampleSource for TensorDataset {
    fn len(&self) -> usize {
        self.inputs.len()
    }

    fn sample(&self, index: usize) -> Result<(Tensor, Target)> {
        let input = self
            .inputs
            .get(index)
            .ok_or_else(|| Error::arg(format!("sample {index} out of range ({} samples)", self.inputs.len())))?;
        Ok((input.clone(), self.targets[index].clone()))
    }
}
