//! Detections, location refinement and non-maximum suppression.

use std::fs;
use std::path::Path;

use actparse_core::model::{LocMode, NUM_H1, NUM_H2};
use actparse_core::{Error, Result};
use actparse_data::Cuboid;

use crate::proposals::Proposal;

/// One parsed action.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub video_id: String,
    /// Refined centre and the proposal's extents.
    pub volume: Cuboid,
    pub category: usize,
    pub score: f64,
    pub h1_probs: Vec<f32>,
    pub h2_probs: Vec<f32>,
}

/// Moves the proposal centre by the predicted offset. Normalized offsets are
/// scaled by the proposal's width and height; raw offsets are added as is.
/// Time is never changed.
pub fn refine_location(proposal: &Proposal, loc: [f32; 2], mode: LocMode) -> [f64; 3] {
    let v = &proposal.volume;
    let (dx, dy) = match mode {
        LocMode::Normalized => (f64::from(loc[0]) * v.w, f64::from(loc[1]) * v.h),
        LocMode::RawPixels => (f64::from(loc[0]), f64::from(loc[1])),
    };
    [v.cx + dx, v.cy + dy, v.ct]
}

/// Greedy per-category suppression. Detections are visited by descending
/// score (ties keep input order); one is kept unless it overlaps an already
/// kept detection of its category by more than `iou_threshold`.
pub fn nms(detections: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].score.total_cmp(&detections[a].score));
    let mut kept: Vec<Detection> = Vec::new();
    for i in order {
        let d = &detections[i];
        let clash = kept
            .iter()
            .any(|k| k.category == d.category && k.volume.iou(&d.volume) > iou_threshold);
        if !clash {
            kept.push(d.clone());
        }
    }
    kept
}

/// Tab-separated lines: `video_id x y t w h l category score h1.. h2..`.
pub fn detections_to_text(detections: &[Detection]) -> String {
    let mut s = String::new();
    for d in detections {
        let v = d.volume;
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            d.video_id, v.cx, v.cy, v.ct, v.w, v.h, v.l, d.category, d.score
        ));
        for p in d.h1_probs.iter().chain(&d.h2_probs) {
            s.push('\t');
            s.push_str(&p.to_string());
        }
        s.push('\n');
    }
    s
}

pub fn detections_from_text(text: &str) -> Result<Vec<Detection>> {
    let expected = 9 + NUM_H1 + NUM_H2;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != expected {
            return Err(Error::parse(n, format!("expected {expected} fields, got {}", f.len())));
        }
        let num = |k: usize| -> Result<f64> {
            f[k].parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(n, format!("bad number '{}'", f[k])))
        };
        let category = f[7]
            .parse::<usize>()
            .map_err(|_| Error::parse(n, format!("bad category '{}'", f[7])))?;
        let score = num(8)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::parse(n, format!("score {score} outside [0, 1]")));
        }
        let probs = (9..expected).map(|k| num(k).map(|v| v as f32)).collect::<Result<Vec<f32>>>()?;
        out.push(Detection {
            video_id: f[0].to_string(),
            volume: Cuboid::new(num(1)?, num(2)?, num(3)?, num(4)?, num(5)?, num(6)?),
            category,
            score,
            h1_probs: probs[..NUM_H1].to_vec(),
            h2_probs: probs[NUM_H1..].to_vec(),
        });
    }
    Ok(out)
}

pub fn write_detections(path: &Path, detections: &[Detection]) -> Result<()> {
    fs::write(path, detections_to_text(detections))?;
    Ok(())
}

pub fn load_detections(path: &Path) -> Result<Vec<Detection>> {
    detections_from_text(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prop(cx: f64, cy: f64, ct: f64) -> Proposal {
        Proposal {
            video_id: "v".into(),
            volume: Cuboid::new(cx, cy, ct, 20.0, 40.0, 16.0),
        }
    }

    #[test]
    fn zero_offset_keeps_the_centre() {
        assert_eq!(refine_location(&prop(10.0, 20.0, 5.0), [0.0, 0.0], LocMode::Normalized), [10.0, 20.0, 5.0]);
    }

    #[test]
    fn raw_offsets_add_directly() {
        assert_eq!(refine_location(&prop(100.0, 80.0, 50.0), [-5.0, 10.0], LocMode::RawPixels), [95.0, 90.0, 50.0]);
    }

    #[test]
    fn normalized_offsets_scale_by_extent() {
        assert_eq!(refine_location(&prop(100.0, 80.0, 50.0), [0.25, -0.5], LocMode::Normalized), [105.0, 60.0, 50.0]);
    }
}
