//! Proposal-based parsing of a whole video.

use actparse_core::model::{ActionNet, ModelOutput};
use actparse_core::{Error, Result, Tensor};
use actparse_data::{Cuboid, InputMode};
use actparse_motion::{compose, compose_gray_only, warp_clip, AppearanceMotionClip, VideoClip};

use crate::detection::{nms, refine_location, Detection};
use crate::proposals::Proposal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseConfig {
    pub input: InputMode,
    pub nms_iou: f64,
    /// Proposals per forward pass.
    pub batch_size: usize,
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig {
            input: InputMode::AppearanceMotion(Default::default()),
            nms_iou: 0.3,
            batch_size: 32,
        }
    }
}

/// Appearance-motion channels of a full video. Flow is computed once and
/// shared by every proposal inside it.
pub fn video_volume(video: &VideoClip, mode: InputMode) -> Result<AppearanceMotionClip> {
    match mode {
        InputMode::AppearanceMotion(flow) => compose(video, &flow),
        InputMode::GrayOnly => compose_gray_only(video),
    }
}

/// Integer voxel bounds `[start, end)` covering a continuous range.
fn voxel_range(r: [f64; 2]) -> (i64, i64) {
    let a = r[0].round() as i64;
    let b = (r[1].round() as i64).max(a + 1);
    (a, b)
}

/// Copies the voxels of `volume` out of `am`. Parts outside the video are
/// zero, so edge proposals keep their size.
pub fn extract_subvolume(am: &AppearanceMotionClip, volume: &Cuboid) -> Result<AppearanceMotionClip> {
    let [t, h, w] = am.extents();
    let (x0, x1) = voxel_range(volume.x_range());
    let (y0, y1) = voxel_range(volume.y_range());
    let (t0, t1) = voxel_range(volume.t_range());
    let (sw, sh, sl) = ((x1 - x0) as usize, (y1 - y0) as usize, (t1 - t0) as usize);
    let src = am.volume().data();
    let mut out = vec![0f32; 3 * sl * sh * sw];
    for c in 0..3 {
        for dt in 0..sl {
            let ft = t0 + dt as i64;
            if ft < 0 || ft >= t as i64 {
                continue;
            }
            for dy in 0..sh {
                let fy = y0 + dy as i64;
                if fy < 0 || fy >= h as i64 {
                    continue;
                }
                let src_row = ((c * t + ft as usize) * h + fy as usize) * w;
                let dst_row = ((c * sl + dt) * sh + dy) * sw;
                let xs = x0.max(0);
                let xe = x1.min(w as i64);
                if xs >= xe {
                    continue;
                }
                let n = (xe - xs) as usize;
                let d = (xs - x0) as usize;
                out[dst_row + d..dst_row + d + n].copy_from_slice(&src[src_row + xs as usize..src_row + xs as usize + n]);
            }
        }
    }
    AppearanceMotionClip::new(Tensor::from_vec(&[3, sl, sh, sw], out)?)
}

/// Warped network inputs for a list of proposals, `(N, 3, T, H, W)`.
pub fn proposal_batch(am: &AppearanceMotionClip, proposals: &[&Cuboid], extents: [usize; 3]) -> Result<Tensor> {
    let per = 3 * extents.iter().product::<usize>();
    let mut data = Vec::with_capacity(per * proposals.len());
    for v in proposals {
        let sub = extract_subvolume(am, v)?;
        data.extend_from_slice(warp_clip(&sub, extents)?.volume().data());
    }
    Tensor::from_vec(&[proposals.len(), 3, extents[0], extents[1], extents[2]], data)
}

/// Runs the model over every proposal of a pre-composed video.
pub fn score_proposals(model: &ActionNet, am: &AppearanceMotionClip, proposals: &[Proposal], batch_size: usize) -> Result<Vec<ModelOutput>> {
    if batch_size == 0 {
        return Err(Error::arg("batch size must be positive"));
    }
    let [_, t, h, w] = model.config().input_shape;
    let mut out = Vec::with_capacity(proposals.len());
    for chunk in proposals.chunks(batch_size) {
        let vols: Vec<&Cuboid> = chunk.iter().map(|p| &p.volume).collect();
        out.extend(model.forward(&proposal_batch(am, &vols, [t, h, w])?)?);
    }
    Ok(out)
}

/// Turns one model output into a detection, or `None` when the background
/// class wins.
pub fn to_detection(model: &ActionNet, proposal: &Proposal, output: &ModelOutput) -> Option<Detection> {
    let cfg = model.config();
    let background = cfg.background_class();
    let arg = output.argmax_class();
    if Some(arg) == background {
        return None;
    }
    let mut category = 0;
    for (i, &p) in output.class_probs.iter().enumerate().take(cfg.num_categories) {
        if p > output.class_probs[category] {
            category = i;
        }
    }
    let [x, y, t] = refine_location(proposal, output.loc, cfg.loc_mode);
    let v = proposal.volume;
    Some(Detection {
        video_id: proposal.video_id.clone(),
        volume: Cuboid::new(x, y, t, v.w, v.h, v.l),
        category,
        score: f64::from(output.class_probs[category]).clamp(0.0, 1.0),
        h1_probs: output.h1_probs.clone(),
        h2_probs: output.h2_probs.clone(),
    })
}

/// Detects the actions of one video from a list of candidate volumes.
pub fn parse_video(model: &ActionNet, video: &VideoClip, proposals: &[Proposal], config: &ParseConfig) -> Result<Vec<Detection>> {
    if proposals.is_empty() {
        return Ok(Vec::new());
    }
    let am = video_volume(video, config.input)?;
    parse_volume(model, &am, proposals, config)
}

/// As [`parse_video`] on an already composed video.
pub fn parse_volume(model: &ActionNet, am: &AppearanceMotionClip, proposals: &[Proposal], config: &ParseConfig) -> Result<Vec<Detection>> {
    let outputs = score_proposals(model, am, proposals, config.batch_size)?;
    let raw: Vec<Detection> = proposals
        .iter()
        .zip(&outputs)
        .filter_map(|(p, o)| to_detection(model, p, o))
        .collect();
    Ok(nms(&raw, config.nms_iou))
}
