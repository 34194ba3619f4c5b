use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use actparse_cli::images::{write_feature_grids, write_overlays};
use actparse_cli::pipeline::{self, ProposalSource};
use actparse_cli::RunConfig;
use actparse_core::checks;
use actparse_core::model::{ActionNet, Checkpoint};
use actparse_core::Tensor;
use actparse_data::samples::prepare_clip;
use actparse_data::DatasetManifest;
use actparse_motion::VideoClip;
use actparse_parse::{load_detections, load_proposals, write_detections};

#[derive(Parser)]
#[command(name = "actparse", version, about = "Multi-task action parsing on synthetic videos")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Override one config key, `key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Clips,
    Videos,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with train/test manifests.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "clips")]
        kind: SynthKind,
        /// Number of categories (overrides the config).
        #[arg(long)]
        categories: Option<usize>,
    },
    /// Write the appearance-motion volume of one clip as a tensor blob.
    Compose {
        #[arg(long)]
        clip: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train from scratch on a clip manifest.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Held-out manifest to score after training.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Fine-tune a pretrained checkpoint on proposal crops of training videos.
    Finetune {
        #[arg(long)]
        pretrained: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Detect actions in one video or in every video of a manifest.
    Parse {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        video: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Id written for a single video; defaults to its file name.
        #[arg(long)]
        video_id: Option<String>,
        /// Proposal file to use instead of the sliding-window generator.
        #[arg(long)]
        proposals: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-frame PNGs with detection boxes (single video).
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Score a detection file against a ground-truth manifest.
    Eval {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference checks of every layer and of the full network.
    Gradcheck {
        /// Random instances per layer.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Seeds for the end-to-end check.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Tile one layer's feature maps into PNG grids.
    Inspect {
        /// Defaults to a freshly initialized model of the profile.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to an all-zero clip.
        #[arg(long)]
        clip: Option<PathBuf>,
        #[arg(long, default_value = "conv2")]
        layer: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Input problems exit with 2, everything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    use actparse_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Argument(_) | E::Parse { .. } | E::Config(_) | E::Format(_) | E::Data(_) => 2,
                E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
                _ => 1,
            };
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            return if io.kind() == std::io::ErrorKind::NotFound { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli, extra: &[(&str, String)]) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?),
        None => None,
    };
    let mut pairs = Vec::new();
    if let Some(p) = &cli.profile {
        pairs.push(("profile".to_string(), p.clone()));
    }
    if let Some(s) = cli.seed {
        pairs.push(("seed".to_string(), s.to_string()));
    }
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| actparse_core::Error::Config(format!("override '{o}' is not key=value")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    pairs.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    Ok(RunConfig::load(text.as_deref(), &pairs)?)
}

fn parent_dir(p: &Path) -> PathBuf {
    p.parent().filter(|d| !d.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Synth { out, kind, categories } => {
            let key = match kind {
                SynthKind::Clips => "synth.categories",
                SynthKind::Videos => "synth.video_categories",
            };
            let extra: Vec<(&str, String)> = categories.iter().map(|c| (key, c.to_string())).collect();
            let cfg = load_config(&cli, &extra)?;
            fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            cfg.write_echo(out)?;
            let (train, test) = match kind {
                SynthKind::Clips => pipeline::synth_clips(out, &cfg)?,
                SynthKind::Videos => pipeline::synth_videos(out, &cfg)?,
            };
            let total = train.entries.len() + test.entries.len();
            println!("entries {total}  train {}  test {}", train.entries.len(), test.entries.len());
            for (c, n) in pipeline::category_counts(&train) {
                println!("  category {c:>2}: {n} train");
            }
        }
        Command::Compose { clip, out } => {
            let cfg = load_config(&cli, &[])?;
            let clip = VideoClip::load(clip)?;
            let am = actparse_parse::video_volume(&clip, cfg.input_mode()?)?;
            let mut w = std::io::BufWriter::new(fs::File::create(out)?);
            am.volume().write_blob(&mut w)?;
            println!("wrote {} volume to {}", am.volume().shape(), out.display());
        }
        Command::Train { data, out, test, max_iterations } => {
            let extra: Vec<(&str, String)> = max_iterations.iter().map(|n| ("train.max_iterations", n.to_string())).collect();
            let cfg = load_config(&cli, &extra)?;
            cfg.write_echo(out)?;
            let (ckpt, log) = pipeline::train_on_manifest(data, &cfg, out, 100)?;
            println!("trained {} iterations; checkpoint {}", log.len(), out.join("checkpoint.bin").display());
            if let Some(test) = test {
                let held = pipeline::load_clip_dataset(test, &cfg)?;
                let report = pipeline::evaluate_on_clips(&ckpt.model, &held, &cfg)?;
                let text = pipeline::clip_report_text(&report);
                fs::write(out.join("clip_report.txt"), &text)?;
                print!("{text}");
            }
        }
        Command::Finetune { pretrained, data, out, max_iterations } => {
            let extra: Vec<(&str, String)> = max_iterations.iter().map(|n| ("finetune.max_iterations", n.to_string())).collect();
            let cfg = load_config(&cli, &extra)?;
            cfg.write_echo(out)?;
            let start = Checkpoint::load(pretrained).with_context(|| format!("loading {}", pretrained.display()))?;
            let (_, log) = pipeline::finetune_on_videos(&start, data, &cfg, out, 100)?;
            println!("fine-tuned {} iterations; checkpoint {}", log.len(), out.join("checkpoint.bin").display());
        }
        Command::Parse {
            checkpoint,
            video,
            manifest,
            video_id,
            proposals,
            out,
            overlay,
        } => {
            let cfg = load_config(&cli, &[])?;
            cfg.write_echo(&parent_dir(out))?;
            let model = Checkpoint::load(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?.model;
            let given = proposals.as_ref().map(|p| load_proposals(p)).transpose()?;
            let source = match &given {
                Some(p) => ProposalSource::Given(p),
                None => ProposalSource::SlidingWindow,
            };
            let (detections, clipped) = match (video, manifest) {
                (Some(v), _) => {
                    if v.is_dir() && fs::read_dir(v)?.next().is_none() {
                        (Vec::new(), 0)
                    } else {
                        let id = video_id
                            .clone()
                            .unwrap_or_else(|| v.file_name().map_or_else(|| v.display().to_string(), |n| n.to_string_lossy().into_owned()));
                        let clip = VideoClip::load(v)?;
                        let (d, c) = pipeline::parse_one(&model, &clip, &id, &source, &cfg)?;
                        if let Some(dir) = overlay {
                            write_overlays(&clip, &d, dir)?;
                        }
                        (d, c)
                    }
                }
                (None, Some(m)) => pipeline::parse_manifest(&model, m, &source, &cfg)?,
                (None, None) => bail!(actparse_core::Error::arg("give --video or --manifest")),
            };
            if clipped > 0 {
                eprintln!("warning: {clipped} proposals were clipped to the video bounds or dropped");
            }
            write_detections(out, &detections)?;
            println!("{} detections written to {}", detections.len(), out.display());
        }
        Command::Eval { detections, ground_truth, out } => {
            let cfg = load_config(&cli, &[])?;
            if !ground_truth.exists() {
                bail!(actparse_core::Error::Data(format!("ground-truth file {} not found", ground_truth.display())));
            }
            DatasetManifest::read(ground_truth)?;
            let dets = load_detections(detections).with_context(|| format!("reading {}", detections.display()))?;
            let report = pipeline::evaluate_detections(&dets, ground_truth, &cfg)?;
            cfg.write_echo(out)?;
            pipeline::write_report(&report, out)?;
            print!("{}", report.to_table());
        }
        Command::Gradcheck { trials, seeds } => {
            let cfg = load_config(&cli, &[])?;
            let mut results = checks::layer_checks(cfg.seed(), *trials)?;
            results.extend(checks::end_to_end_checks(0..*seeds)?);
            let mut failed = 0;
            println!("{:<28} {:>7} {:>12} {:>10}  result", "gradient", "trials", "max rel err", "tolerance");
            for r in &results {
                println!(
                    "{:<28} {:>7} {:>12.3e} {:>10.0e}  {}",
                    r.name,
                    r.trials,
                    r.max_error,
                    r.tolerance,
                    if r.passed() { "ok" } else { "FAIL" }
                );
                failed += usize::from(!r.passed());
            }
            if failed > 0 {
                println!("{failed} of {} checks failed", results.len());
                return Ok(1);
            }
            println!("all {} checks passed", results.len());
        }
        Command::Inspect { checkpoint, clip, layer, out } => {
            let cfg = load_config(&cli, &[])?;
            let model = match checkpoint {
                Some(p) => Checkpoint::load(p)?.model,
                None => ActionNet::build(cfg.model_config()?, cfg.seed())?,
            };
            let shape = model.config().input_shape;
            let input = match clip {
                Some(p) => prepare_clip(&VideoClip::load(p)?, cfg.input_mode()?, [shape[1], shape[2], shape[3]])?,
                None => Tensor::zeros(&shape)?,
            };
            let mut dims = vec![1];
            dims.extend_from_slice(input.dims());
            let maps = model.feature_maps(&input.reshape(&dims)?, layer)?;
            let d = maps.dims().to_vec();
            let maps = maps.reshape(&d[1..])?;
            cfg.write_echo(out)?;
            let paths = write_feature_grids(&maps, out, layer)?;
            println!("{layer}: {} channels of {}x{}x{}; {} grids in {}", d[1], d[2], d[3], d[4], paths.len(), out.display());
        }
    }
    Ok(0)
}
