//! Five-crop spatial augmentation with relative locations, and per-subclip
//! temporal scaling.

use actparse_core::{rng, Error, Result, Tensor};
use actparse_motion::{temporal_rescale, VideoClip};
use rand::Rng as _;

use crate::geometry::Cuboid;
use crate::synth::ActionAnnotation;

/// One of the five crops of a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct SubClip {
    pub clip: VideoClip,
    /// Shift of the crop centre from the source clip centre, in pixels:
    /// `(-t,-t)`, `(t,-t)`, `(-t,t)`, `(t,t)`, `(0,0)` for top-left,
    /// top-right, bottom-left, bottom-right and centre.
    pub offset: [i64; 2],
    /// Position of the source clip centre relative to the crop centre,
    /// divided by the crop width and height. Adding this (times the crop
    /// size) to the crop centre recovers the centre of an aligned action.
    pub loc_target: [f64; 2],
}

/// The five crop shifts for margin `t`, in the order s1..s5.
pub fn crop_offsets(t: usize) -> [[i64; 2]; 5] {
    let t = t as i64;
    [[-t, -t], [t, -t], [-t, t], [t, t], [0, 0]]
}

/// Copies the `(T, h, w)` window with top-left `(y0, x0)` out of a clip.
pub fn crop_region(clip: &VideoClip, y0: usize, x0: usize, h: usize, w: usize) -> Result<VideoClip> {
    let (t, sh, sw, c) = (clip.len(), clip.height(), clip.width(), clip.channels());
    if y0 + h > sh || x0 + w > sw || h == 0 || w == 0 {
        return Err(Error::geometry(format!(
            "crop {h}x{w} at ({y0}, {x0}) does not fit a {sh}x{sw} clip"
        )));
    }
    let src = clip.frames().data();
    let mut out = Vec::with_capacity(t * h * w * c);
    for f in 0..t {
        for y in y0..y0 + h {
            let row = ((f * sh + y) * sw + x0) * c;
            out.extend_from_slice(&src[row..row + w * c]);
        }
    }
    VideoClip::new(Tensor::from_vec(&[t, h, w, c], out)?)
}

/// Crops a clip into five `(W - 2t) x (H - 2t)` subclips.
pub fn crop5(clip: &VideoClip, t: usize) -> Result<Vec<SubClip>> {
    let (h, w) = (clip.height(), clip.width());
    if 2 * t >= h.min(w) {
        return Err(Error::arg(format!("crop margin {t} is too large for a {h}x{w} clip")));
    }
    let (ch, cw) = (h - 2 * t, w - 2 * t);
    crop_offsets(t)
        .into_iter()
        .map(|offset| {
            // crop centre = clip centre + offset, so the top-left corner is
            // offset by `t + offset` from the clip's
            let x0 = (t as i64 + offset[0]) as usize;
            let y0 = (t as i64 + offset[1]) as usize;
            Ok(SubClip {
                clip: crop_region(clip, y0, x0, ch, cw)?,
                offset,
                loc_target: [-offset[0] as f64 / cw as f64, -offset[1] as f64 / ch as f64],
            })
        })
        .collect()
}

/// Parameters of the augmentation sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    /// Crop margin range, open interval, before canvas scaling.
    pub margin: (f64, f64),
    /// Width the margin range refers to; margins are scaled by
    /// `clip width / reference_width`.
    pub reference_width: f64,
    /// Temporal scale range, open interval.
    pub scale: (f64, f64),
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            margin: (10.0, 50.0),
            reference_width: 256.0,
            scale: (0.5, 1.5),
        }
    }
}

impl AugmentParams {
    /// Integer margins strictly inside the scaled range.
    pub fn margin_range(&self, width: usize) -> Result<(usize, usize)> {
        let k = width as f64 / self.reference_width;
        let (lo, hi) = (self.margin.0 * k, self.margin.1 * k);
        let first = lo.floor() as usize + 1;
        let last = (hi.ceil() as usize).saturating_sub(1);
        if first > last {
            return Err(Error::arg(format!(
                "no integer crop margin inside ({lo:.2}, {hi:.2}) for width {width}"
            )));
        }
        Ok((first, last))
    }
}

/// Five temporally rescaled crops of an annotated clip.
///
/// One margin is drawn per clip and one temporal scale per subclip. Each
/// subclip's location target is the offset of the annotated action centre
/// from the crop centre, normalized by the crop size; its volume is the
/// source volume moved into crop coordinates, clipped to the crop and
/// stretched in time.
pub fn augment(
    clip: &VideoClip,
    annotation: &ActionAnnotation,
    params: &AugmentParams,
    seed: u64,
) -> Result<Vec<(VideoClip, ActionAnnotation)>> {
    let mut r = rng::stream(seed, rng::stream_id("augment", 0));
    let (first, last) = params.margin_range(clip.width())?;
    let t = r.gen_range(first..=last);
    let subclips = crop5(clip, t)?;
    let (h, w) = (clip.height() as f64, clip.width() as f64);
    let mut out = Vec::with_capacity(5);
    for sub in subclips {
        let p = loop {
            let p: f64 = r.gen_range(params.scale.0..params.scale.1);
            if p > params.scale.0 {
                break p;
            }
        };
        let scaled = temporal_rescale(&sub.clip, p)?;
        let (cw, ch) = (sub.clip.width() as f64, sub.clip.height() as f64);
        let (ccx, ccy) = (0.5 * w + sub.offset[0] as f64, 0.5 * h + sub.offset[1] as f64);
        let v = &annotation.volume;
        let stretch = scaled.len() as f64 / clip.len() as f64;
        let (x0, y0) = (ccx - 0.5 * cw, ccy - 0.5 * ch);
        let moved = Cuboid::new(v.cx - x0, v.cy - y0, v.ct * stretch, v.w, v.h, v.l * stretch);
        let volume = moved
            .clip_to(&Cuboid::full([scaled.len(), ch as usize, cw as usize]))
            .ok_or_else(|| Error::geometry("augmented crop lost the action"))?;
        let loc_target = [(v.cx - ccx) / cw, (v.cy - ccy) / ch];
        out.push((
            scaled,
            ActionAnnotation {
                volume,
                loc_target,
                ..annotation.clone()
            },
        ));
    }
    Ok(out)
}
