//! Appearance-motion preprocessing.
//!
//! A raw clip is reduced to one intensity channel and two dense optical-flow
//! channels, then resampled to the fixed extents the network expects.

pub mod clip;
pub mod flow;
pub mod resample;

pub use clip::{to_grayscale, AppearanceMotionClip, VideoClip};
pub use flow::{horn_schunck_energy, horn_schunck_flow, horn_schunck_flow_traced, FlowParams};
pub use resample::{rescaled_length, resize_volume, temporal_rescale, warp_clip};

use actparse_core::{Result, Tensor};

/// Stacks grayscale intensity with the flow between consecutive frames.
/// The last frame reuses the flow of the pair before it.
pub fn compose(clip: &VideoClip, params: &FlowParams) -> Result<AppearanceMotionClip> {
    let gray = to_grayscale(clip)?;
    let (t, h, w) = (clip.len(), clip.height(), clip.width());
    let plane = h * w;
    let frame = |i: usize| Tensor::from_vec(&[h, w], gray.data()[i * plane..(i + 1) * plane].to_vec());
    let mut vx = Vec::with_capacity(t * plane);
    let mut vy = Vec::with_capacity(t * plane);
    for i in 0..t - 1 {
        let (u, v) = horn_schunck_flow(&frame(i)?, &frame(i + 1)?, params)?;
        vx.extend_from_slice(u.data());
        vy.extend_from_slice(v.data());
    }
    vx.extend_from_within((t - 2) * plane..);
    vy.extend_from_within((t - 2) * plane..);
    let mut volume = gray.into_data();
    volume.extend(vx);
    volume.extend(vy);
    AppearanceMotionClip::new(Tensor::from_vec(&[3, t, h, w], volume)?)
}

/// Grayscale-only variant with zeroed motion channels, the baseline input
/// used when comparing against appearance-motion data.
pub fn compose_gray_only(clip: &VideoClip) -> Result<AppearanceMotionClip> {
    let gray = to_grayscale(clip)?;
    let n = gray.numel();
    let mut volume = gray.into_data();
    volume.resize(3 * n, 0.0);
    let (t, h, w) = (clip.len(), clip.height(), clip.width());
    AppearanceMotionClip::new(Tensor::from_vec(&[3, t, h, w], volume)?)
}
