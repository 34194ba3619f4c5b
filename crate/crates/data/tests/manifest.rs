use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use actparse_core::model::{LocMode, SampleSource};
use actparse_core::Error;
use actparse_data::dataset::{synthesize_clip_set, synthesize_video_set, ClipSetConfig, VideoSetConfig};
use actparse_data::{
    attributes, build_manifest, split_entries, ActionAnnotation, Cuboid, DatasetManifest, InputMode, ManifestEntry,
    MotionProgram, Split, TensorDataset,
};

fn entry(path: &str, category: usize) -> ManifestEntry {
    ManifestEntry {
        path: path.into(),
        annotation: ActionAnnotation {
            volume: Cuboid::new(10.5, 12.25, 8.0, 20.0, 30.0, 16.0),
            category_id: category,
            h1: [true; 19],
            h2: [false; 14],
            loc_target: [0.125, -0.0625],
        },
        spec: None,
    }
}

#[test]
fn text_round_trip() {
    let m = DatasetManifest {
        version: 1,
        seed: 42,
        split: Split::Test,
        entries: vec![entry("a/x.bin", 1), entry("b/y.bin", 2)],
    };
    let back = DatasetManifest::from_text(&m.to_text()).unwrap();
    assert_eq!(back, m);
    assert!(m.to_text().starts_with("# actparse-manifest version=1 seed=42 split=test\n"));
}

#[test]
fn malformed_lines_name_the_line() {
    let m = DatasetManifest {
        version: 1,
        seed: 1,
        split: Split::All,
        entries: vec![entry("a/x.bin", 1)],
    };
    let mut text = m.to_text();
    text.push_str("broken\tline\n");
    match DatasetManifest::from_text(&text) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    let bad_bits = m.to_text().replace(&"1".repeat(19), &"1".repeat(18));
    assert!(DatasetManifest::from_text(&bad_bits).is_err());
}

#[test]
fn hundred_entries_split_ninety_ten() {
    let entries: Vec<ManifestEntry> = (0..100).map(|i| entry(&format!("c{i}/x.bin"), i % 3)).collect();
    let (train, test) = split_entries(&entries, 0.9, 7);
    assert_eq!((train.len(), test.len()), (90, 10));
    let a: BTreeSet<&str> = train.iter().map(|e| e.path.as_str()).collect();
    let b: BTreeSet<&str> = test.iter().map(|e| e.path.as_str()).collect();
    assert!(a.is_disjoint(&b));
    assert_eq!(a.len() + b.len(), 100);
    assert_eq!(split_entries(&entries, 0.9, 7), (train, test));
}

#[test]
fn groups_never_straddle_the_split() {
    let entries: Vec<ManifestEntry> = (0..100).map(|i| entry(&format!("src{}/s{}.bin", i / 5, i % 5), 0)).collect();
    let (train, test) = split_entries(&entries, 0.9, 3);
    assert_eq!((train.len(), test.len()), (90, 10));
    let tg: BTreeSet<&str> = train.iter().map(|e| e.group()).collect();
    assert!(test.iter().all(|e| !tg.contains(e.group())));
}

#[test]
fn empty_root_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(build_manifest(dir.path(), 0.9, 1), Err(Error::Data(_))));
}

fn small_config() -> ClipSetConfig {
    ClipSetConfig {
        seed: 9,
        programs: vec![MotionProgram::Wave, MotionProgram::Walk],
        clips_per_category: 2,
        ..ClipSetConfig::default()
    }
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn clip_set_regenerates_byte_identically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synthesize_clip_set(a.path(), &small_config()).unwrap();
    build_manifest(a.path(), 0.5, 9).unwrap();
    synthesize_clip_set(b.path(), &small_config()).unwrap();
    build_manifest(b.path(), 0.5, 9).unwrap();
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    assert_eq!(ta.len(), 4 * 5 + 3);
    assert_eq!(ta, tb);
}

#[test]
fn clip_set_labels_rederive_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let index = synthesize_clip_set(dir.path(), &small_config()).unwrap();
    assert_eq!(index.entries.len(), 20);
    for e in &index.entries {
        let spec = e.spec.as_ref().unwrap();
        assert_eq!((e.annotation.h1, e.annotation.h2), attributes(spec));
    }
    let (train, test) = build_manifest(dir.path(), 0.5, 1).unwrap();
    assert_eq!(train.entries.len() + test.entries.len(), 20);
    let data = TensorDataset::from_manifest(&dir.path().join("train.tsv"), InputMode::GrayOnly, LocMode::Normalized, [8, 32, 32]).unwrap();
    assert_eq!(data.len(), train.entries.len());
    let (x, target) = data.sample(0).unwrap();
    assert_eq!(x.dims(), &[3, 8, 32, 32]);
    assert_eq!(target.h1.len(), 19);
    assert_eq!(target.h2.len(), 14);
}

#[test]
fn video_set_has_one_entry_per_action() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = VideoSetConfig {
        num_videos: 3,
        ..VideoSetConfig::default()
    };
    let index = synthesize_video_set(dir.path(), &cfg).unwrap();
    let videos = index.by_path();
    assert_eq!(videos.len(), 3);
    for (_, actions) in &videos {
        assert!((1..=3).contains(&actions.len()));
        for a in actions {
            assert!(Cuboid::full([64, 64, 96]).contains(&a.annotation.volume));
            assert!(a.annotation.category_id < 5);
        }
    }
    index.validate(dir.path()).unwrap();
}
