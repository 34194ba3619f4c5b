//! Candidate action volumes: a sliding-window generator and a text format
//! for externally computed proposals.

use std::fs;
use std::path::Path;

use actparse_core::{Error, Result};
use actparse_data::Cuboid;

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub video_id: String,
    pub volume: Cuboid,
}

/// Window sizes and strides for [`sliding_window_proposals`].
#[derive(Debug, Clone, PartialEq)]
pub struct WindowConfig {
    /// Window extents `(w, h, l)` in pixels and frames.
    pub sizes: Vec<[f64; 3]>,
    /// Step along `(x, y, t)` as a fraction of the window extent.
    pub stride: [f64; 3],
}

impl Default for WindowConfig {
    /// A few hundred windows on a 64x96, 64-frame video.
    fn default() -> Self {
        let mut sizes = Vec::new();
        for (w, h) in [(24.0, 36.0), (32.0, 40.0), (40.0, 48.0)] {
            for l in [16.0, 24.0, 32.0] {
                sizes.push([w, h, l]);
            }
        }
        WindowConfig {
            sizes,
            stride: [0.3, 0.3, 0.3],
        }
    }
}

fn axis_starts(dim: f64, size: f64, stride: f64) -> Vec<f64> {
    let step = (stride * size).round().max(1.0);
    let mut out = Vec::new();
    let mut s = 0.0;
    while s + size <= dim + 1e-9 {
        out.push(s);
        s += step;
    }
    out
}

/// Every window of every size on a regular grid anchored at the video's
/// top-left-first corner. `extents` is `(T, H, W)`.
pub fn sliding_window_proposals(video_id: &str, extents: [usize; 3], config: &WindowConfig) -> Result<Vec<Proposal>> {
    if config.sizes.is_empty() {
        return Err(Error::arg("no window sizes given"));
    }
    if config.stride.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::arg(format!("window strides must be positive, got {:?}", config.stride)));
    }
    let [t, h, w] = extents.map(|v| v as f64);
    let mut out = Vec::new();
    for &[sw, sh, sl] in &config.sizes {
        if !(sw >= 1.0 && sh >= 1.0 && sl >= 1.0) || sw > w || sh > h || sl > t {
            return Err(Error::arg(format!(
                "window {sw}x{sh}x{sl} does not fit a {w}x{h}x{t} video"
            )));
        }
        for &t0 in &axis_starts(t, sl, config.stride[2]) {
            for &y0 in &axis_starts(h, sh, config.stride[1]) {
                for &x0 in &axis_starts(w, sw, config.stride[0]) {
                    out.push(Proposal {
                        video_id: video_id.to_string(),
                        volume: Cuboid::from_bounds([x0, x0 + sw], [y0, y0 + sh], [t0, t0 + sl]),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// One line per proposal: `video_id x y t w h l`, tab-separated, with
/// `(x, y, t)` the centre.
pub fn proposals_to_text(proposals: &[Proposal]) -> String {
    let mut s = String::new();
    for p in proposals {
        let v = p.volume;
        s.push_str(&format!("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", p.video_id, v.cx, v.cy, v.ct, v.w, v.h, v.l));
    }
    s
}

pub fn proposals_from_text(text: &str) -> Result<Vec<Proposal>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(Error::parse(n, format!("expected 7 tab-separated fields, got {}", f.len())));
        }
        let mut v = [0f64; 6];
        for (slot, s) in v.iter_mut().zip(&f[1..]) {
            *slot = s
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(n, format!("bad number '{s}'")))?;
        }
        if v[3] < 1.0 || v[4] < 1.0 || v[5] < 1.0 {
            return Err(Error::parse(n, "proposal extents must be at least 1"));
        }
        out.push(Proposal {
            video_id: f[0].to_string(),
            volume: Cuboid::new(v[0], v[1], v[2], v[3], v[4], v[5]),
        });
    }
    Ok(out)
}

pub fn write_proposals(path: &Path, proposals: &[Proposal]) -> Result<()> {
    fs::write(path, proposals_to_text(proposals))?;
    Ok(())
}

pub fn load_proposals(path: &Path) -> Result<Vec<Proposal>> {
    proposals_from_text(&fs::read_to_string(path)?)
}

/// Clips proposals to a `(T, H, W)` video, dropping any that miss it
/// entirely or shrink below one unit along an axis. Returns how many
/// proposals were changed or dropped.
pub fn clip_to_video(proposals: &mut Vec<Proposal>, extents: [usize; 3]) -> usize {
    let bounds = Cuboid::full(extents);
    let mut touched = 0;
    proposals.retain_mut(|p| {
        if bounds.contains(&p.volume) {
            return true;
        }
        touched += 1;
        match p.volume.clip_to(&bounds) {
            Some(c) if c.w >= 1.0 && c.h >= 1.0 && c.l >= 1.0 => {
                p.volume = c;
                true
            }
            _ => false,
        }
    });
    touched
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_video_window() {
        let cfg = WindowConfig {
            sizes: vec![[20.0, 10.0, 8.0]],
            stride: [1.0, 1.0, 1.0],
        };
        let p = sliding_window_proposals("v", [8, 10, 20], &cfg).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].volume, Cuboid::full([8, 10, 20]));
    }

    #[test]
    fn default_grid_is_hundreds() {
        let n = sliding_window_proposals("v", [64, 64, 96], &WindowConfig::default()).unwrap().len();
        assert!((100..=2000).contains(&n), "{n}");
    }

    #[test]
    fn errors() {
        let mut cfg = WindowConfig::default();
        assert!(sliding_window_proposals("v", [8, 8, 8], &cfg).is_err());
        cfg.sizes.clear();
        assert!(matches!(sliding_window_proposals("v", [64, 64, 64], &cfg), Err(Error::Argument(_))));
    }
}
