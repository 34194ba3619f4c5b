//! Spatio-temporal resampling: the fixed-size warp into the network input
//! and the temporal speed change used for augmentation.

use actparse_core::{Error, Result, Tensor};

use crate::clip::{AppearanceMotionClip, VideoClip};

/// Source sample positions and weights for resizing one axis from `src` to
/// `dst` samples, pixel centres aligned (`x_src = (x + 0.5)·src/dst − 0.5`).
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Trilinear resize of one `(T, H, W)` volume stored flat.
pub fn resize_volume(data: &[f32], src: [usize; 3], dst: [usize; 3]) -> Vec<f32> {
    let [st, sh, sw] = src;
    let [dt, dh, dw] = dst;
    debug_assert_eq!(data.len(), st * sh * sw);
    let (tt, th, tw) = (axis_taps(st, dt), axis_taps(sh, dh), axis_taps(sw, dw));
    let at = |t: usize, y: usize, x: usize| f64::from(data[(t * sh + y) * sw + x]);
    let mut out = Vec::with_capacity(dt * dh * dw);
    for &(t0, t1, ft) in &tt {
        for &(y0, y1, fy) in &th {
            for &(x0, x1, fx) in &tw {
                let plane = |t: usize| {
                    let top = at(t, y0, x0) * (1.0 - fx) + at(t, y0, x1) * fx;
                    let bottom = at(t, y1, x0) * (1.0 - fx) + at(t, y1, x1) * fx;
                    top * (1.0 - fy) + bottom * fy
                };
                out.push((plane(t0) * (1.0 - ft) + plane(t1) * ft) as f32);
            }
        }
    }
    out
}

/// Resizes every channel to `target = (T', H', W')` and rescales the flow
/// values by `W'/W` (Vx) and `H'/H` (Vy) so they stay in output pixels.
pub fn warp_clip(am: &AppearanceMotionClip, target: [usize; 3]) -> Result<AppearanceMotionClip> {
    if target.contains(&0) {
        return Err(Error::arg(format!("warp target {target:?} has a zero extent")));
    }
    let src = am.extents();
    let scale = [1.0, target[2] as f64 / src[2] as f64, target[1] as f64 / src[1] as f64];
    let mut out = Vec::with_capacity(3 * target.iter().product::<usize>());
    for (c, s) in scale.iter().enumerate() {
        let resized = resize_volume(am.channel(c), src, target);
        if c == 0 {
            out.extend(resized);
        } else {
            out.extend(resized.into_iter().map(|v| (f64::from(v) * s) as f32));
        }
    }
    AppearanceMotionClip::new(Tensor::from_vec(&[3, target[0], target[1], target[2]], out)?)
}

/// Number of frames after scaling a clip of `frames` frames by `p`.
pub fn rescaled_length(frames: usize, p: f64) -> Result<usize> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::arg(format!("temporal scale must be positive, got {p}")));
    }
    let len = (p * frames as f64).round() as usize;
    if len < 2 {
        return Err(Error::arg(format!("scaling {frames} frames by {p} leaves {len} frames")));
    }
    Ok(len)
}

/// Linear resampling along time to `round(p·T)` frames, first and last
/// frames kept in place.
pub fn temporal_rescale(clip: &VideoClip, p: f64) -> Result<VideoClip> {
    let t = clip.len();
    let len = rescaled_length(t, p)?;
    let frame = clip.height() * clip.width() * clip.channels();
    let src = clip.frames().data();
    let mut out = Vec::with_capacity(len * frame);
    for i in 0..len {
        let pos = i as f64 * (t - 1) as f64 / (len - 1) as f64;
        let lo = (pos.floor() as usize).min(t - 1);
        let hi = (lo + 1).min(t - 1);
        let f = pos - lo as f64;
        let (a, b) = (&src[lo * frame..(lo + 1) * frame], &src[hi * frame..(hi + 1) * frame]);
        out.extend(a.iter().zip(b).map(|(&x, &y)| (f64::from(x) * (1.0 - f) + f64::from(y) * f) as f32));
    }
    let mut dims = clip.frames().dims().to_vec();
    dims[0] = len;
    VideoClip::new(Tensor::from_vec(&dims, out)?)
}
