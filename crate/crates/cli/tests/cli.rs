use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use actparse_data::DatasetManifest;
use actparse_parse::{detections_to_text, Detection};

fn actparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actparse")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn toy_synth_counts_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = actparse(&["synth", "--out", path(&a), "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("entries 400  train 360  test 40"), "{}", stdout(&o));
    assert!(actparse(&["synth", "--out", path(&b), "--seed", "4"]).status.success());
    for f in ["index.tsv", "train.tsv", "test.tsv", "effective_config.txt", "clips/00017/s3.bin"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn zero_categories_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = actparse(&["synth", "--out", path(dir.path()), "--categories", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "seed = 3\ntrain.batchsize = 4\n").unwrap();
    let o = actparse(&["synth", "--out", path(dir.path()), "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("train.batchsize"));
}

#[test]
fn paper_profile_echoes_its_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let o = actparse(&["synth", "--profile", "paper", "--out", path(dir.path()), "--categories", "1", "--set", "synth.clips_per_category=5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo = fs::read_to_string(dir.path().join("effective_config.txt")).unwrap();
    for line in ["train.learning_rate = 0.005", "train.momentum = 0.9", "train.batch_size = 40", "profile = paper"] {
        assert!(echo.lines().any(|l| l == line), "{line}\n{echo}");
    }
}

#[test]
fn zero_iterations_write_only_the_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    let common = ["--set", "input=gray", "--set", "synth.clips_per_category=5"];
    let mut args = vec!["synth", "--out", path(&data), "--categories", "2"];
    args.extend(common);
    assert!(actparse(&args).status.success());
    let train = data.join("train.tsv");
    let mut args = vec!["train", "--data", path(&train), "--out", path(&run), "--max-iterations", "0"];
    args.extend(common);
    let o = actparse(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("checkpoint.bin").exists());
    let log = fs::read_to_string(run.join("loss.csv")).unwrap();
    assert_eq!(log, "iteration,lr,l_cat,l_h1,l_h2,l_bbox,total\n");

    let ckpt = actparse_core::model::Checkpoint::load(&run.join("checkpoint.bin")).unwrap();
    assert_eq!(ckpt.iteration, 0);

    // a couple of real steps extend the log with one row each
    let mut args = vec!["train", "--data", path(&train), "--out", path(&run), "--max-iterations", "2"];
    args.extend(common);
    assert!(actparse(&args).status.success());
    assert_eq!(fs::read_to_string(run.join("loss.csv")).unwrap().lines().count(), 3);
}

fn detections_from_truth(manifest: &DatasetManifest) -> Vec<Detection> {
    manifest
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| Detection {
            video_id: e.path.clone(),
            volume: e.annotation.volume,
            category: e.annotation.category_id,
            score: 1.0 / (1.0 + i as f64),
            h1_probs: e.annotation.h1.iter().map(|&b| f32::from(u8::from(b))).collect(),
            h2_probs: e.annotation.h2.iter().map(|&b| f32::from(u8::from(b))).collect(),
        })
        .collect()
}

#[test]
fn self_evaluation_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("videos");
    let o = actparse(&["synth", "--kind", "videos", "--out", path(&data), "--set", "synth.videos=4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let index = data.join("index.tsv");
    let dets = dir.path().join("dets.tsv");
    fs::write(&dets, detections_to_text(&detections_from_truth(&DatasetManifest::read(&index).unwrap()))).unwrap();
    let report = dir.path().join("report");
    let o = actparse(&["eval", "--detections", path(&dets), "--ground-truth", path(&index), "--out", path(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("MAP 1.0000"), "{}", stdout(&o));
    let attrs = fs::read_to_string(report.join("attributes.csv")).unwrap();
    assert_eq!(attrs.lines().count(), 1 + 33);
    assert!(fs::read_to_string(report.join("pr.csv")).unwrap().starts_with("category,rank,recall,precision\n"));

    let missing = dir.path().join("nope.tsv");
    let o = actparse(&["eval", "--detections", path(&dets), "--ground-truth", path(&missing), "--out", path(&report)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());

    fs::write(&dets, "v\t1\t2\t3\n").unwrap();
    let o = actparse(&["eval", "--detections", path(&dets), "--ground-truth", path(&index), "--out", path(&report)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

fn fresh_checkpoint(dir: &Path) -> std::path::PathBuf {
    let cfg = actparse_core::model::ModelConfig {
        num_categories: 5,
        include_background: true,
        ..actparse_core::model::ModelConfig::toy()
    };
    let ckpt = actparse_core::model::Checkpoint {
        model: actparse_core::model::ActionNet::build(cfg, 2).unwrap(),
        optimizer: actparse_core::layers::OptimizerConfig::finetune(),
        iteration: 0,
        seed: 2,
    };
    let p = dir.join("model.bin");
    ckpt.save(&p).unwrap();
    p
}

#[test]
fn parse_routes_and_handles_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = fresh_checkpoint(dir.path());
    let empty = dir.path().join("empty_video");
    fs::create_dir(&empty).unwrap();
    let out = dir.path().join("out/dets.tsv");
    let o = actparse(&["parse", "--checkpoint", path(&ckpt), "--video", path(&empty), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");

    let data = dir.path().join("videos");
    assert!(actparse(&["synth", "--kind", "videos", "--out", path(&data), "--set", "synth.videos=1"]).status.success());
    let video = data.join("videos/0000/video.bin");
    let props = dir.path().join("props.tsv");
    // one proposal partly outside the frame, one for another video
    fs::write(&props, "clip\t40\t30\t20\t32\t40\t24\nother\t40\t30\t20\t32\t40\t24\nclip\t90\t30\t20\t32\t40\t24\n").unwrap();
    let overlay = dir.path().join("overlay");
    let o = actparse(&[
        "parse", "--checkpoint", path(&ckpt), "--video", path(&video), "--video-id", "clip", "--proposals", path(&props),
        "--out", path(&out), "--overlay", path(&overlay), "--set", "input=gray",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 proposals were clipped"));
    let text = fs::read_to_string(&out).unwrap();
    for line in text.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(f.len(), 9 + 19 + 14);
        assert_eq!(f[0], "clip");
    }
    assert!(text.lines().count() <= 2);
    assert_eq!(fs::read_dir(&overlay).unwrap().count(), 64);
}

#[test]
fn gradcheck_reports_every_layer() {
    let o = actparse(&["gradcheck", "--trials", "2", "--seeds", "1"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("max rel err"));
    for name in ["conv3d.weights", "maxpool3d", "fc.input", "relu", "softmax_cross_entropy", "head_h2.bias"] {
        assert!(s.contains(name), "{name}");
    }
}

#[test]
fn inspect_tiles_feature_maps() {
    let dir = tempfile::tempdir().unwrap();
    let o = actparse(&["inspect", "--layer", "conv2", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // toy conv2 runs at 4x16x16 with 16 channels: a 4x4 grid per frame
    let grids: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "png"))
        .collect();
    assert_eq!(grids.len(), 4);
    let dec = png::Decoder::new(fs::File::open(dir.path().join("conv2_t00.png")).unwrap());
    let mut reader = dec.read_info().unwrap();
    assert_eq!((reader.info().width, reader.info().height), (67, 67));
    let mut buf = vec![0; reader.output_buffer_size()];
    reader.next_frame(&mut buf).unwrap();
    // an all-zero clip leaves only the biases, so each tile is flat
    for tile in 0..16 {
        let (gx, gy) = ((tile % 4) * 17, (tile / 4) * 17);
        let first = buf[gy * 67 + gx];
        for y in 0..16 {
            for x in 0..16 {
                assert_eq!(buf[(gy + y) * 67 + gx + x], first);
            }
        }
    }

    let o = actparse(&["inspect", "--layer", "conv9", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("conv1"));
}
