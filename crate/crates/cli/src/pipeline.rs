//! The stages behind each subcommand, callable without going through
//! argument parsing.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use actparse_core::model::{train, ActionNet, Checkpoint, ModelOutput, StepRecord, TrainObserver, TrainOptions};
use actparse_core::{rng, Error, Result, Tensor};
use actparse_data::dataset::{synthesize_clip_set, synthesize_video_set, ClipSetConfig, VideoSetConfig};
use actparse_data::{build_manifest, DatasetManifest, TensorDataset};
use actparse_eval::{evaluate, evaluate_clips, ground_truth_from_manifest, ClipReport, EvalReport};
use actparse_motion::VideoClip;
use actparse_parse::{
    append_samples, clip_to_video, label_proposals, parse_volume, sliding_window_proposals, video_volume, Detection, Proposal,
};

use crate::config::RunConfig;

/// Source clips are cut into this many crops each.
pub const CROPS_PER_SOURCE: usize = 5;

/// Writes the single-action corpus and its train/test manifests.
pub fn synth_clips(root: &Path, cfg: &RunConfig) -> Result<(DatasetManifest, DatasetManifest)> {
    let per_category = cfg.usize("synth.clips_per_category")?;
    if per_category == 0 || per_category % CROPS_PER_SOURCE != 0 {
        return Err(Error::arg(format!(
            "synth.clips_per_category must be a positive multiple of {CROPS_PER_SOURCE}, got {per_category}"
        )));
    }
    let clip_cfg = ClipSetConfig {
        seed: cfg.seed(),
        programs: cfg.programs("synth.categories")?,
        clips_per_category: per_category / CROPS_PER_SOURCE,
        ..ClipSetConfig::default()
    };
    synthesize_clip_set(root, &clip_cfg)?;
    build_manifest(root, cfg.f64("synth.train_fraction")?, cfg.seed())
}

/// Writes the multi-action video corpus and its train/test manifests.
pub fn synth_videos(root: &Path, cfg: &RunConfig) -> Result<(DatasetManifest, DatasetManifest)> {
    let base = VideoSetConfig::default();
    let k = cfg.usize("synth.video_categories")?;
    if k == 0 || k > base.programs.len() {
        return Err(Error::arg(format!("synth.video_categories must be between 1 and {}", base.programs.len())));
    }
    let video_cfg = VideoSetConfig {
        seed: cfg.seed(),
        programs: base.programs[..k].to_vec(),
        num_videos: cfg.usize("synth.videos")?,
        ..base
    };
    synthesize_video_set(root, &video_cfg)?;
    build_manifest(root, cfg.f64("synth.video_train_fraction")?, cfg.seed())
}

fn num_categories(manifest: &DatasetManifest) -> Result<usize> {
    manifest
        .entries
        .iter()
        .map(|e| e.annotation.category_id + 1)
        .max()
        .ok_or_else(|| Error::Data("manifest has no entries".into()))
}

/// Network-ready samples of a clip manifest.
pub fn load_clip_dataset(manifest: &Path, cfg: &RunConfig) -> Result<TensorDataset> {
    let model = cfg.model_config()?;
    let [_, t, h, w] = model.input_shape;
    TensorDataset::from_manifest(manifest, cfg.input_mode()?, model.loc_mode, [t, h, w])
}

/// Streams the loss log to CSV and keeps the latest checkpoint on disk.
pub struct RunRecorder {
    log: BufWriter<fs::File>,
    checkpoint: PathBuf,
    progress_every: usize,
    pub records: Vec<StepRecord>,
}

impl RunRecorder {
    pub fn create(out_dir: &Path, progress_every: usize) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        let mut log = BufWriter::new(fs::File::create(out_dir.join("loss.csv"))?);
        writeln!(log, "{}", StepRecord::CSV_HEADER)?;
        Ok(RunRecorder {
            log,
            checkpoint: out_dir.join("checkpoint.bin"),
            progress_every,
            records: Vec::new(),
        })
    }
}

impl TrainObserver for RunRecorder {
    fn on_step(&mut self, record: &StepRecord) -> Result<()> {
        writeln!(self.log, "{}", record.csv_line())?;
        if self.progress_every > 0 && (record.iteration + 1).is_multiple_of(self.progress_every) {
            eprintln!("iteration {:>6}  lr {:.2e}  loss {:.4}", record.iteration + 1, record.lr, record.loss.total);
        }
        self.records.push(*record);
        Ok(())
    }

    fn on_checkpoint(&mut self, checkpoint: &Checkpoint) -> Result<()> {
        self.log.flush()?;
        checkpoint.save(&self.checkpoint)
    }
}

/// Trains from scratch on a clip manifest. Writes `checkpoint.bin` and
/// `loss.csv` under `out_dir`.
pub fn train_on_clips(data: &TensorDataset, categories: usize, cfg: &RunConfig, out_dir: &Path, progress_every: usize) -> Result<(Checkpoint, Vec<StepRecord>)> {
    let model_cfg = actparse_core::model::ModelConfig {
        num_categories: categories,
        ..cfg.model_config()?
    };
    let state = Checkpoint {
        model: ActionNet::build(model_cfg, cfg.seed())?,
        optimizer: cfg.optimizer("train")?,
        iteration: 0,
        seed: cfg.seed(),
    };
    actparse_core::model::train::check_compatible(&state.model, data)?;
    let mut rec = RunRecorder::create(out_dir, progress_every)?;
    let done = train(state, data, &TrainOptions { checkpoint_every: Some(500) }, &mut rec)?;
    Ok((done, rec.records))
}

pub fn train_on_manifest(manifest: &Path, cfg: &RunConfig, out_dir: &Path, progress_every: usize) -> Result<(Checkpoint, Vec<StepRecord>)> {
    let categories = num_categories(&DatasetManifest::read(manifest)?)?;
    let data = load_clip_dataset(manifest, cfg)?;
    train_on_clips(&data, categories, cfg, out_dir, progress_every)
}

/// Forward passes over a dataset in fixed-size batches.
pub fn predict(model: &ActionNet, data: &TensorDataset, batch: usize) -> Result<Vec<ModelOutput>> {
    let mut out = Vec::with_capacity(data.inputs.len());
    for chunk in data.inputs.chunks(batch.max(1)) {
        let mut dims = vec![chunk.len()];
        dims.extend_from_slice(chunk[0].dims());
        let flat: Vec<f32> = chunk.iter().flat_map(|t| t.data().iter().copied()).collect();
        out.extend(model.forward(&Tensor::from_vec(&dims, flat)?)?);
    }
    Ok(out)
}

pub fn evaluate_on_clips(model: &ActionNet, data: &TensorDataset, cfg: &RunConfig) -> Result<ClipReport> {
    evaluate_clips(&predict(model, data, 32)?, &data.targets, cfg.f64("eval.hit_threshold")?)
}

pub fn clip_report_text(r: &ClipReport) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".into(), |v| format!("{v:.4}"));
    format!(
        "samples {}\naccuracy {:.4}\nloc_mae {:.4}\nh1_mean_auc {}\nh2_mean_auc {}\nh1_hits {}/{}\nh2_hits {}/{}\n",
        r.samples,
        r.accuracy,
        r.loc_mae,
        opt(r.attributes.h1.mean_auc),
        opt(r.attributes.h2.mean_auc),
        r.attributes.h1.hits,
        r.attributes.h1.names.len(),
        r.attributes.h2.hits,
        r.attributes.h2.names.len()
    )
}

/// Manifest paths are relative to the manifest's directory.
pub fn video_path(manifest_path: &Path, rel: &str) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new(".")).join(rel)
}

/// Ground-truth annotations grouped by video path, in manifest order.
pub fn videos_of(manifest: &DatasetManifest) -> Vec<(String, Vec<actparse_data::ActionAnnotation>)> {
    let mut out: Vec<(String, Vec<actparse_data::ActionAnnotation>)> = Vec::new();
    for e in &manifest.entries {
        match out.iter_mut().find(|(p, _)| *p == e.path) {
            Some((_, v)) => v.push(e.annotation.clone()),
            None => out.push((e.path.clone(), vec![e.annotation.clone()])),
        }
    }
    out
}

/// Labelled proposal crops of every video of a manifest, the fine-tuning
/// training set.
pub fn proposal_dataset(manifest_path: &Path, model: &ActionNet, cfg: &RunConfig) -> Result<TensorDataset> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let mc = model.config();
    let background = mc
        .background_class()
        .ok_or_else(|| Error::Config("fine-tuning needs a model with a background class".into()))?;
    let [_, t, h, w] = mc.input_shape;
    let sampling = cfg.sampling()?;
    let windows = cfg.window_config()?;
    let mode = cfg.input_mode()?;
    let mut out = TensorDataset::default();
    for (k, (path, truths)) in videos_of(&manifest).into_iter().enumerate() {
        let video = VideoClip::load(&video_path(manifest_path, &path))?;
        let am = video_volume(&video, mode)?;
        let props = sliding_window_proposals(&path, [video.len(), video.height(), video.width()], &windows)?;
        let labelled = label_proposals(
            &truths,
            &props,
            background,
            mc.loc_mode,
            &sampling,
            rng::stream_id("finetune-video", k as u64) ^ cfg.seed(),
        );
        append_samples(&am, &labelled, [t, h, w], &mut out)?;
    }
    if out.inputs.is_empty() {
        return Err(Error::Data(format!("no fine-tuning samples in {}", manifest_path.display())));
    }
    Ok(out)
}

/// Warm-starts from a pretrained checkpoint with a fresh class head plus a
/// background class, then trains on proposal crops.
pub fn finetune_on_videos(pretrained: &Checkpoint, manifest: &Path, cfg: &RunConfig, out_dir: &Path, progress_every: usize) -> Result<(Checkpoint, Vec<StepRecord>)> {
    let categories = num_categories(&DatasetManifest::read(manifest)?)?;
    let start = actparse_core::model::prepare_finetune(pretrained, categories, true, cfg.optimizer("finetune")?, cfg.seed())?;
    let data = proposal_dataset(manifest, &start.model, cfg)?;
    let mut rec = RunRecorder::create(out_dir, progress_every)?;
    let done = train(start, &data, &TrainOptions { checkpoint_every: Some(500) }, &mut rec)?;
    Ok((done, rec.records))
}

/// Where the candidate volumes come from.
pub enum ProposalSource<'a> {
    SlidingWindow,
    /// Externally computed proposals; those of other videos are ignored.
    Given(&'a [Proposal]),
}

/// Parses one video. Returns the detections and how many given proposals
/// had to be clipped or dropped at the video borders.
pub fn parse_one(model: &ActionNet, video: &VideoClip, video_id: &str, source: &ProposalSource, cfg: &RunConfig) -> Result<(Vec<Detection>, usize)> {
    let extents = [video.len(), video.height(), video.width()];
    let (props, clipped) = match source {
        ProposalSource::SlidingWindow => (sliding_window_proposals(video_id, extents, &cfg.window_config()?)?, 0),
        ProposalSource::Given(all) => {
            let mut p: Vec<Proposal> = all.iter().filter(|p| p.video_id == video_id).cloned().collect();
            let n = clip_to_video(&mut p, extents);
            (p, n)
        }
    };
    if props.is_empty() {
        return Ok((Vec::new(), clipped));
    }
    let pc = cfg.parse_config()?;
    let am = video_volume(video, pc.input)?;
    Ok((parse_volume(model, &am, &props, &pc)?, clipped))
}

/// Parses every video of a manifest; detection ids are the manifest paths.
pub fn parse_manifest(model: &ActionNet, manifest_path: &Path, source: &ProposalSource, cfg: &RunConfig) -> Result<(Vec<Detection>, usize)> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let mut all = Vec::new();
    let mut clipped = 0;
    for (path, _) in videos_of(&manifest) {
        let video = VideoClip::load(&video_path(manifest_path, &path))?;
        let (d, c) = parse_one(model, &video, &path, source, cfg)?;
        all.extend(d);
        clipped += c;
    }
    Ok((all, clipped))
}

pub fn evaluate_detections(detections: &[Detection], ground_truth: &Path, cfg: &RunConfig) -> Result<EvalReport> {
    let gt = ground_truth_from_manifest(&DatasetManifest::read(ground_truth)?);
    evaluate(detections, &gt, &cfg.eval_config()?)
}

/// `report.txt`, `categories.csv`, `attributes.csv` and `pr.csv`.
pub fn write_report(report: &EvalReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.txt"), report.to_table())?;
    fs::write(out_dir.join("categories.csv"), report.categories_csv())?;
    fs::write(out_dir.join("attributes.csv"), report.attributes_csv())?;
    fs::write(out_dir.join("pr.csv"), report.pr_csv())?;
    Ok(())
}

/// Per-category counts of a manifest, for summaries.
pub fn category_counts(m: &DatasetManifest) -> BTreeMap<usize, usize> {
    let mut c = BTreeMap::new();
    for e in &m.entries {
        *c.entry(e.annotation.category_id).or_default() += 1;
    }
    c
}
