//! Dataset manifests: one tab-separated record per clip.
//!
//! ```text
//! # actparse-manifest version=1 seed=7 split=train
//! # path category h1 h2 loc_w loc_h cx cy ct w h l spec
//! clips/00003/s1.bin  2  0100...  1010...  0.07  -0.07  20.5  ...  program=wave ...
//! ```
//!
//! Attribute bits are written as `0`/`1` strings. Paths are relative to the
//! manifest's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use actparse_core::model::{NUM_H1, NUM_H2};
use actparse_core::{rng, Error, Result};
use rand::seq::SliceRandom;

use crate::action::{attributes, ActionSpec};
use crate::geometry::Cuboid;
use crate::synth::ActionAnnotation;

pub const MANIFEST_VERSION: u32 = 1;
const MAGIC: &str = "# actparse-manifest";
const COLUMNS: &str = "# path\tcategory\th1\th2\tloc_w\tloc_h\tcx\tcy\tct\tw\th\tl\tspec";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    All,
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::All => "all",
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Split::All),
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::arg(format!("unknown split '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Clip path relative to the manifest directory.
    pub path: String,
    pub annotation: ActionAnnotation,
    /// The generator parameters, when the clip was synthesized.
    pub spec: Option<ActionSpec>,
}

impl ManifestEntry {
    /// Key that keeps related entries (the crops of one source clip, the
    /// actions of one video) on the same side of a split.
    pub fn group(&self) -> &str {
        self.path.rsplit_once('/').map_or(self.path.as_str(), |(dir, _)| dir)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub version: u32,
    pub seed: u64,
    pub split: Split,
    pub entries: Vec<ManifestEntry>,
}

fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn bits_from_str<const N: usize>(s: &str, line: usize) -> Result<[bool; N]> {
    let mut out = [false; N];
    if s.len() != N {
        return Err(Error::parse(line, format!("expected {N} attribute bits, got '{s}'")));
    }
    for (o, ch) in out.iter_mut().zip(s.chars()) {
        *o = match ch {
            '0' => false,
            '1' => true,
            _ => return Err(Error::parse(line, format!("attribute bits must be 0/1, got '{s}'"))),
        };
    }
    Ok(out)
}

impl DatasetManifest {
    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC} version={} seed={} split={}\n{COLUMNS}\n", self.version, self.seed, self.split);
        for e in &self.entries {
            let a = &e.annotation;
            let v = a.volume.to_fields();
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.path,
                a.category_id,
                bits_to_string(&a.h1),
                bits_to_string(&a.h2),
                a.loc_target[0],
                a.loc_target[1],
                v[0],
                v[1],
                v[2],
                v[3],
                v[4],
                v[5],
                e.spec.as_ref().map_or_else(|| "-".to_string(), ActionSpec::to_text),
            ));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty manifest"))?;
        let rest = header
            .strip_prefix(MAGIC)
            .ok_or_else(|| Error::parse(1, "not an actparse manifest"))?;
        let (mut version, mut seed, mut split) = (None, None, None);
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("version", v)) => version = v.parse::<u32>().ok(),
                Some(("seed", v)) => seed = v.parse::<u64>().ok(),
                Some(("split", v)) => split = Some(v.parse::<Split>().map_err(|e| Error::parse(1, e.to_string()))?),
                _ => return Err(Error::parse(1, format!("unexpected header field '{field}'"))),
            }
        }
        let version = version.ok_or_else(|| Error::parse(1, "missing version"))?;
        if version != MANIFEST_VERSION {
            return Err(Error::parse(1, format!("unsupported manifest version {version}")));
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 13 {
                return Err(Error::parse(n, format!("expected 13 tab-separated fields, got {}", f.len())));
            }
            let num = |k: usize| -> Result<f64> {
                f[k].parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(n, format!("bad number '{}'", f[k])))
            };
            let category_id = f[1]
                .parse::<usize>()
                .map_err(|_| Error::parse(n, format!("bad category '{}'", f[1])))?;
            let volume = Cuboid::new(num(6)?, num(7)?, num(8)?, num(9)?, num(10)?, num(11)?);
            volume.validate().map_err(|e| Error::parse(n, e.to_string()))?;
            let spec = match f[12] {
                "-" => None,
                s => Some(ActionSpec::from_text(s).map_err(|e| Error::parse(n, e.to_string()))?),
            };
            entries.push(ManifestEntry {
                path: f[0].to_string(),
                annotation: ActionAnnotation {
                    volume,
                    category_id,
                    h1: bits_from_str::<NUM_H1>(f[2], n)?,
                    h2: bits_from_str::<NUM_H2>(f[3], n)?,
                    loc_target: [num(4)?, num(5)?],
                },
                spec,
            });
        }
        Ok(DatasetManifest {
            version,
            seed: seed.ok_or_else(|| Error::parse(1, "missing seed"))?,
            split: split.ok_or_else(|| Error::parse(1, "missing split"))?,
            entries,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Checks that entries exist, clip paths resolve under `dir` and stored
    /// attributes agree with the stored generator parameters.
    pub fn validate(&self, dir: &Path) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Data("manifest has no entries".into()));
        }
        for e in &self.entries {
            if !dir.join(&e.path).exists() {
                return Err(Error::Data(format!("clip '{}' does not exist under {}", e.path, dir.display())));
            }
            if let Some(spec) = &e.spec {
                let (h1, h2) = attributes(spec);
                if h1 != e.annotation.h1 || h2 != e.annotation.h2 || spec.category_id != e.annotation.category_id {
                    return Err(Error::Data(format!("labels of '{}' disagree with its generator spec", e.path)));
                }
            }
        }
        Ok(())
    }

    /// Entries grouped by clip path, in first-appearance order.
    pub fn by_path(&self) -> Vec<(String, Vec<&ManifestEntry>)> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: BTreeMap<&str, Vec<&ManifestEntry>> = BTreeMap::new();
        for e in &self.entries {
            if !groups.contains_key(e.path.as_str()) {
                order.push(e.path.clone());
            }
            groups.entry(e.path.as_str()).or_default().push(e);
        }
        order
            .into_iter()
            .map(|p| {
                let g = groups.remove(p.as_str()).unwrap_or_default();
                (p, g)
            })
            .collect()
    }
}

/// File name of the full index written by dataset synthesis.
pub const INDEX_FILE: &str = "index.tsv";

/// Splits `root/index.tsv` into `root/train.tsv` and `root/test.tsv`.
///
/// Entries are shuffled by group (see [`ManifestEntry::group`]) so that the
/// crops of one source clip never straddle the split; `train_fraction` of
/// the groups, rounded, go to training.
pub fn build_manifest(root: &Path, train_fraction: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::arg(format!("train fraction {train_fraction} outside [0, 1]")));
    }
    let index_path = root.join(INDEX_FILE);
    if !index_path.exists() {
        return Err(Error::Data(format!("no dataset index at {}", index_path.display())));
    }
    let index = DatasetManifest::read(&index_path)?;
    index.validate(root)?;
    let (train, test) = split_entries(&index.entries, train_fraction, seed);
    let make = |split, entries| DatasetManifest {
        version: MANIFEST_VERSION,
        seed,
        split,
        entries,
    };
    let (train, test) = (make(Split::Train, train), make(Split::Test, test));
    train.write(&root.join("train.tsv"))?;
    test.write(&root.join("test.tsv"))?;
    Ok((train, test))
}

/// The grouped shuffled split behind [`build_manifest`].
pub fn split_entries(entries: &[ManifestEntry], train_fraction: f64, seed: u64) -> (Vec<ManifestEntry>, Vec<ManifestEntry>) {
    let mut groups: Vec<&str> = Vec::new();
    for e in entries {
        if !groups.contains(&e.group()) {
            groups.push(e.group());
        }
    }
    groups.shuffle(&mut rng::stream(seed, rng::stream_id("split", 0)));
    let n_train = (groups.len() as f64 * train_fraction).round() as usize;
    let train_groups: Vec<&str> = groups[..n_train].to_vec();
    let (train, test): (Vec<&ManifestEntry>, Vec<&ManifestEntry>) =
        entries.iter().partition(|e| train_groups.contains(&e.group()));
    (train.into_iter().cloned().collect(), test.into_iter().cloned().collect())
}

/// Resolves an entry path against the manifest's directory.
pub fn resolve(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
    manifest_path.parent().unwrap_or_else(|| Path::new(".")).join(&entry.path)
}
