//! Clip and video synthesis: backgrounds, single aligned action clips and
//! multi-action composite videos with exact ground truth.

use std::fmt;
use std::str::FromStr;

use actparse_core::model::{NUM_H1, NUM_H2};
use actparse_core::{rng, Error, Result, Tensor};
use actparse_motion::VideoClip;
use rand::Rng as _;

use crate::action::{attributes, ActionSpec};
use crate::geometry::Cuboid;
use crate::sprite::{bounds, draw, figure_frames, Capsule};

/// Ground truth for one action instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionAnnotation {
    /// Bounding cuboid of the figure, in pixels and frames of the clip or
    /// video it belongs to.
    pub volume: Cuboid,
    pub category_id: usize,
    pub h1: [bool; NUM_H1],
    pub h2: [bool; NUM_H2],
    /// Offset of the action centre from the clip centre, divided by the clip
    /// width and height.
    pub loc_target: [f64; 2],
}

impl ActionAnnotation {
    pub fn from_spec(spec: &ActionSpec, volume: Cuboid, loc_target: [f64; 2]) -> Self {
        let (h1, h2) = attributes(spec);
        ActionAnnotation {
            volume,
            category_id: spec.category_id,
            h1,
            h2,
            loc_target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Background {
    Flat,
    /// Smooth low-contrast noise.
    Textured,
    /// Texture plus a few static blocks of colour.
    Distractor,
}

impl Background {
    pub const ALL: [Background; 3] = [Background::Flat, Background::Textured, Background::Distractor];

    /// The background used for the `index`-th clip or video.
    pub fn cycled(index: usize) -> Self {
        Self::ALL[index % Self::ALL.len()]
    }
}

impl fmt::Display for Background {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Background::Flat => "flat",
            Background::Textured => "textured",
            Background::Distractor => "distractor",
        })
    }
}

impl FromStr for Background {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.to_string() == s)
            .ok_or_else(|| Error::arg(format!("unknown background '{s}'")))
    }
}

const TEXTURE_CELL: usize = 8;

/// One static `(H, W, 3)` background image. Lumas stay within `[0.3, 0.65]`.
pub fn render_background(kind: Background, canvas: (usize, usize), seed: u64) -> Vec<f32> {
    let (h, w) = canvas;
    let mut r = rng::stream(seed, rng::stream_id("background", 0));
    let base: f64 = r.gen_range(0.4..0.55);
    let tint: [f64; 3] = [r.gen_range(-0.04..0.04), r.gen_range(-0.04..0.04), r.gen_range(-0.04..0.04)];
    let mut img = vec![0f32; h * w * 3];
    let (gh, gw) = (h / TEXTURE_CELL + 2, w / TEXTURE_CELL + 2);
    let grid: Vec<f64> = (0..gh * gw).map(|_| r.gen_range(-0.08..0.08)).collect();
    for y in 0..h {
        for x in 0..w {
            let noise = if kind == Background::Flat {
                0.0
            } else {
                let (fy, fx) = (y as f64 / TEXTURE_CELL as f64, x as f64 / TEXTURE_CELL as f64);
                let (y0, x0) = (fy.floor() as usize, fx.floor() as usize);
                let (ty, tx) = (fy - y0 as f64, fx - x0 as f64);
                let g = |yy: usize, xx: usize| grid[yy * gw + xx];
                (g(y0, x0) * (1.0 - tx) + g(y0, x0 + 1) * tx) * (1.0 - ty) + (g(y0 + 1, x0) * (1.0 - tx) + g(y0 + 1, x0 + 1) * tx) * ty
            };
            for c in 0..3 {
                img[(y * w + x) * 3 + c] = (base + tint[c] + noise).clamp(0.0, 1.0) as f32;
            }
        }
    }
    if kind == Background::Distractor {
        for _ in 0..3 {
            let (bh, bw) = (r.gen_range(3..=(h / 5).max(3)), r.gen_range(3..=(w / 5).max(3)));
            let (y0, x0) = (r.gen_range(0..h.saturating_sub(bh).max(1)), r.gen_range(0..w.saturating_sub(bw).max(1)));
            let luma: f64 = r.gen_range(0.32..0.62);
            let colour = [luma + r.gen_range(-0.05..0.05), luma, luma + r.gen_range(-0.05..0.05)];
            for y in y0..(y0 + bh).min(h) {
                for x in x0..(x0 + bw).min(w) {
                    for c in 0..3 {
                        img[(y * w + x) * 3 + c] = colour[c].clamp(0.0, 1.0) as f32;
                    }
                }
            }
        }
    }
    img
}

/// Spatial bounds `[x0, x1, y0, y1]` of a figure over all `frames`, shifted
/// by `origin`.
fn figure_extent(frames: &[Vec<Capsule>], origin: (f64, f64)) -> [f64; 4] {
    frames.iter().map(|caps| bounds(caps)).fold(
        [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
        |acc, b| {
            [
                acc[0].min(b[0] + origin.0),
                acc[1].max(b[1] + origin.0),
                acc[2].min(b[2] + origin.1),
                acc[3].max(b[3] + origin.1),
            ]
        },
    )
}

/// Renders `spec` centred on an `(H, W)` canvas for `length` frames.
///
/// The figure stays aligned: its hips are at the canvas centre half-way
/// through the clip. `seed` drives the background texture.
pub fn synth_action_clip(
    spec: &ActionSpec,
    canvas: (usize, usize),
    length: usize,
    background: Background,
    seed: u64,
) -> Result<(VideoClip, ActionAnnotation)> {
    let (h, w) = canvas;
    if length < 8 {
        return Err(Error::arg(format!("clips need at least 8 frames, got {length}")));
    }
    let frames = figure_frames(spec, canvas, length);
    let b = figure_extent(&frames, (0.0, 0.0));
    if b[0] < 0.0 || b[2] < 0.0 || b[1] > w as f64 || b[3] > h as f64 {
        return Err(Error::geometry(format!(
            "{} figure spans x [{:.1}, {:.1}] y [{:.1}, {:.1}], outside the {h}x{w} canvas",
            spec.program, b[0], b[1], b[2], b[3]
        )));
    }
    let bg = render_background(background, canvas, seed);
    let mut data = Vec::with_capacity(length * h * w * 3);
    for caps in &frames {
        let mut frame = bg.clone();
        draw(&mut frame, w, caps, spec.character().palette, (0.0, 0.0));
        data.extend(frame);
    }
    let clip = VideoClip::new(Tensor::from_vec(&[length, h, w, 3], data)?)?;
    let volume = Cuboid::from_bounds([b[0], b[1]], [b[2], b[3]], [0.0, length as f64]);
    let loc = [(volume.cx - 0.5 * w as f64) / w as f64, (volume.cy - 0.5 * h as f64) / h as f64];
    Ok((clip, ActionAnnotation::from_spec(spec, volume, loc)))
}

/// Where an action goes in a composite video: the top-left corner of its
/// local canvas, its first frame, and its local canvas and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub x: usize,
    pub y: usize,
    pub t: usize,
    pub canvas: (usize, usize),
    pub length: usize,
}

/// Renders several actions into one `(H, W)` video of `length` frames.
///
/// Each action is drawn as in [`synth_action_clip`] on its own local canvas,
/// offset by its placement; later actions draw over earlier ones. The
/// annotation volumes are the analytic bounding cuboids of the figures.
pub fn compose_multiaction_video(
    actions: &[(ActionSpec, Placement)],
    canvas: (usize, usize),
    length: usize,
    background: Background,
    seed: u64,
) -> Result<(VideoClip, Vec<ActionAnnotation>)> {
    let (h, w) = canvas;
    let mut figures = Vec::with_capacity(actions.len());
    let mut annotations = Vec::with_capacity(actions.len());
    for (spec, p) in actions {
        if p.x + p.canvas.1 > w || p.y + p.canvas.0 > h || p.t + p.length > length {
            return Err(Error::geometry(format!("placement {p:?} falls outside the {h}x{w}x{length} video")));
        }
        let frames = figure_frames(spec, p.canvas, p.length);
        let origin = (p.x as f64, p.y as f64);
        let b = figure_extent(&frames, origin);
        let volume = Cuboid::from_bounds([b[0], b[1]], [b[2], b[3]], [p.t as f64, (p.t + p.length) as f64])
            .clip_to(&Cuboid::full([length, h, w]))
            .ok_or_else(|| Error::geometry(format!("{} figure is not visible", spec.program)))?;
        annotations.push(ActionAnnotation::from_spec(spec, volume, [0.0, 0.0]));
        figures.push((frames, origin, p.t, spec.character().palette));
    }
    let bg = render_background(background, canvas, seed);
    let mut data = Vec::with_capacity(length * h * w * 3);
    for f in 0..length {
        let mut frame = bg.clone();
        for (frames, origin, t0, palette) in &figures {
            if f >= *t0 && f < t0 + frames.len() {
                draw(&mut frame, w, &frames[f - t0], *palette, *origin);
            }
        }
        data.extend(frame);
    }
    Ok((VideoClip::new(Tensor::from_vec(&[length, h, w, 3], data)?)?, annotations))
}
