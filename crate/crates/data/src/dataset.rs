//! On-disk synthetic datasets: augmented single-action clips for
//! pretraining and multi-action videos for fine-tuning and parsing.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use actparse_core::{rng, Error, Result, Tensor};
use actparse_motion::{to_grayscale, VideoClip};
use rand::Rng as _;

use crate::action::{ActionSpec, MotionProgram};
use crate::augment::{augment, AugmentParams};
use crate::geometry::Cuboid;
use crate::manifest::{DatasetManifest, ManifestEntry, Split, INDEX_FILE, MANIFEST_VERSION};
use crate::synth::{compose_multiaction_video, synth_action_clip, Background, Placement};

/// Settings for the aligned single-action corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipSetConfig {
    pub seed: u64,
    /// Motion programs in category order; category `i` is `programs[i]`.
    pub programs: Vec<MotionProgram>,
    pub clips_per_category: usize,
    pub canvas: (usize, usize),
    pub augment: AugmentParams,
}

impl Default for ClipSetConfig {
    fn default() -> Self {
        ClipSetConfig {
            seed: 1,
            programs: MotionProgram::ALL[..10].to_vec(),
            clips_per_category: 20,
            canvas: (48, 48),
            augment: AugmentParams::default(),
        }
    }
}

fn write_blob(path: &Path, tensor: &Tensor) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    tensor.write_blob(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Stores a clip as one `(T, H, W, 1)` grayscale blob. Colour is dropped
/// because the appearance-motion input only uses intensity.
fn write_gray(path: &Path, clip: &VideoClip) -> Result<()> {
    let gray = to_grayscale(clip)?;
    let d = gray.dims().to_vec();
    write_blob(path, &gray.reshape(&[d[0], d[1], d[2], 1])?)
}

/// Renders, augments and writes the single-action corpus under `root`:
/// `clips/NNNNN/sK.bin` for source clip `NNNNN` and crop `K`, plus the full
/// index `index.tsv`.
pub fn synthesize_clip_set(root: &Path, config: &ClipSetConfig) -> Result<DatasetManifest> {
    if config.programs.is_empty() || config.clips_per_category == 0 {
        return Err(Error::arg("the clip set needs at least one program and one clip per category"));
    }
    let mut entries = Vec::new();
    for (category, &program) in config.programs.iter().enumerate() {
        for k in 0..config.clips_per_category {
            let idx = (category * config.clips_per_category + k) as u64;
            let mut r = rng::stream(config.seed, rng::stream_id("spec", idx));
            let spec = ActionSpec::sample(program, category, &mut r);
            let (clip, annotation) = synth_action_clip(
                &spec,
                config.canvas,
                program.clip_length(),
                Background::cycled(idx as usize),
                rng::stream_id("render", idx) ^ config.seed,
            )?;
            let subclips = augment(&clip, &annotation, &config.augment, rng::stream_id("crop", idx) ^ config.seed)?;
            for (s, (sub, ann)) in subclips.into_iter().enumerate() {
                let rel = format!("clips/{idx:05}/s{}.bin", s + 1);
                write_gray(&root.join(&rel), &sub)?;
                entries.push(ManifestEntry {
                    path: rel,
                    annotation: ann,
                    spec: Some(spec.clone()),
                });
            }
        }
    }
    let index = DatasetManifest {
        version: MANIFEST_VERSION,
        seed: config.seed,
        split: Split::All,
        entries,
    };
    index.write(&root.join(INDEX_FILE))?;
    Ok(index)
}

/// Settings for the multi-action video corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSetConfig {
    pub seed: u64,
    pub programs: Vec<MotionProgram>,
    pub num_videos: usize,
    /// `(H, W)` of each video.
    pub canvas: (usize, usize),
    pub length: usize,
    /// Inclusive range of actions per video.
    pub actions_per_video: (usize, usize),
    /// Local canvas each action is rendered on.
    pub action_canvas: (usize, usize),
    /// Largest IoU allowed between two actions of the same video.
    pub max_overlap: f64,
}

impl Default for VideoSetConfig {
    fn default() -> Self {
        use MotionProgram::*;
        VideoSetConfig {
            seed: 2,
            programs: vec![Walk, Jump, Wave, Clap, Squat],
            num_videos: 24,
            canvas: (64, 96),
            length: 64,
            actions_per_video: (2, 3),
            action_canvas: (48, 48),
            max_overlap: 0.05,
        }
    }
}

/// Draws specs and placements for one video. Placements are redrawn until
/// the actions overlap by at most `max_overlap` IoU (giving up after a
/// bounded number of attempts and keeping the actions placed so far).
pub fn sample_video_layout(config: &VideoSetConfig, video: usize) -> Vec<(ActionSpec, Placement)> {
    let mut r = rng::stream(config.seed, rng::stream_id("layout", video as u64));
    let (lo, hi) = config.actions_per_video;
    let n = r.gen_range(lo..=hi.max(lo));
    let (h, w) = config.canvas;
    let (ah, aw) = config.action_canvas;
    let mut placed: Vec<(ActionSpec, Placement, Cuboid)> = Vec::new();
    for _ in 0..n {
        let category = r.gen_range(0..config.programs.len());
        let program = config.programs[category];
        let spec = ActionSpec::sample(program, category, &mut r);
        let length = program.clip_length().min(config.length);
        for _attempt in 0..50 {
            let p = Placement {
                x: r.gen_range(0..=w.saturating_sub(aw)),
                y: r.gen_range(0..=h.saturating_sub(ah)),
                t: r.gen_range(0..=config.length - length),
                canvas: config.action_canvas,
                length,
            };
            let approx = Cuboid::from_bounds(
                [p.x as f64 + 0.25 * aw as f64, (p.x + aw) as f64 - 0.25 * aw as f64],
                [p.y as f64, (p.y + ah) as f64],
                [p.t as f64, (p.t + length) as f64],
            );
            if placed.iter().all(|(_, _, c)| c.iou(&approx) <= config.max_overlap) {
                placed.push((spec, p, approx));
                break;
            }
        }
    }
    placed.into_iter().map(|(s, p, _)| (s, p)).collect()
}

/// Renders the multi-action corpus: `videos/NNNN/video.bin` RGB blobs and an
/// index with one entry per action.
pub fn synthesize_video_set(root: &Path, config: &VideoSetConfig) -> Result<DatasetManifest> {
    if config.programs.is_empty() || config.num_videos == 0 {
        return Err(Error::arg("the video set needs at least one program and one video"));
    }
    let mut entries = Vec::new();
    for v in 0..config.num_videos {
        let layout = sample_video_layout(config, v);
        let (video, annotations) = compose_multiaction_video(
            &layout,
            config.canvas,
            config.length,
            Background::cycled(v),
            rng::stream_id("video", v as u64) ^ config.seed,
        )?;
        let rel = format!("videos/{v:04}/video.bin");
        write_blob(&root.join(&rel), video.frames())?;
        for ((spec, _), ann) in layout.into_iter().zip(annotations) {
            entries.push(ManifestEntry {
                path: rel.clone(),
                annotation: ann,
                spec: Some(spec),
            });
        }
    }
    let index = DatasetManifest {
        version: MANIFEST_VERSION,
        seed: config.seed,
        split: Split::All,
        entries,
    };
    index.write(&root.join(INDEX_FILE))?;
    Ok(index)
}
