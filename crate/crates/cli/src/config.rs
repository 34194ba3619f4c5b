//! Flat `key = value` run configuration.
//!
//! Every key has a default that depends on the profile. A config file or a
//! command-line override may only set keys from that list; anything else is
//! rejected, so a typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use actparse_core::layers::OptimizerConfig;
use actparse_core::model::{LocMode, ModelConfig};
use actparse_core::{Error, Result};
use actparse_data::{InputMode, MotionProgram};
use actparse_eval::{EvalConfig, MatchRule};
use actparse_motion::FlowParams;
use actparse_parse::{ParseConfig, ProposalSampling, WindowConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Paper,
    Toy,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "toy" => Ok(Profile::Toy),
            other => Err(Error::Config(format!("unknown profile '{other}' (expected paper or toy)"))),
        }
    }
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Toy => "toy",
        }
    }
}

fn optimizer_defaults(profile: Profile) -> (OptimizerConfig, OptimizerConfig) {
    match profile {
        Profile::Paper => (OptimizerConfig::pretrain(), OptimizerConfig::finetune()),
        Profile::Toy => (
            OptimizerConfig {
                learning_rate: 0.01,
                momentum: 0.9,
                batch_size: 16,
                lr_decay_factor: 0.3,
                lr_step_iterations: 1000,
                max_iterations: 2500,
            },
            OptimizerConfig {
                learning_rate: 0.003,
                momentum: 0.9,
                batch_size: 16,
                lr_decay_factor: 0.3,
                lr_step_iterations: 600,
                max_iterations: 1200,
            },
        ),
    }
}

fn defaults(profile: Profile) -> Vec<(&'static str, String)> {
    let model = match profile {
        Profile::Paper => ModelConfig::paper(),
        Profile::Toy => ModelConfig::toy(),
    };
    let (pre, fine) = optimizer_defaults(profile);
    let flow = FlowParams::default();
    let sampling = ProposalSampling::default();
    let rule = MatchRule::default();
    let mut v: Vec<(&'static str, String)> = vec![
        ("profile", profile.name().into()),
        ("seed", "1".into()),
        ("input", "appearance_motion".into()),
        ("flow.alpha", flow.alpha.to_string()),
        ("flow.iterations", flow.iterations.to_string()),
        ("model.lambda1", model.lambda1.to_string()),
        ("model.lambda2", model.lambda2.to_string()),
        ("model.beta", model.beta.to_string()),
        ("model.loc_mode", "normalized".into()),
        ("synth.categories", "10".into()),
        ("synth.clips_per_category", "40".into()),
        ("synth.train_fraction", "0.9".into()),
        ("synth.videos", "48".into()),
        ("synth.video_categories", "5".into()),
        ("synth.video_train_fraction", "0.5".into()),
        ("finetune.positive_iou", sampling.positive_iou.to_string()),
        ("finetune.background_iou", sampling.background_iou.to_string()),
        ("finetune.background_ratio", sampling.background_ratio.to_string()),
        ("parse.nms_iou", "0.3".into()),
        ("parse.stride", "0.3".into()),
        ("parse.batch_size", "32".into()),
        ("eval.precision_fraction", rule.precision_fraction.to_string()),
        ("eval.recall_fraction", rule.recall_fraction.to_string()),
        ("eval.hit_threshold", "0.6".into()),
    ];
    for (prefix, o) in [("train", pre), ("finetune", fine)] {
        let keys: [(&'static str, &'static str, String); 6] = [
            ("train.learning_rate", "finetune.learning_rate", o.learning_rate.to_string()),
            ("train.momentum", "finetune.momentum", o.momentum.to_string()),
            ("train.batch_size", "finetune.batch_size", o.batch_size.to_string()),
            ("train.lr_decay_factor", "finetune.lr_decay_factor", o.lr_decay_factor.to_string()),
            ("train.lr_step_iterations", "finetune.lr_step_iterations", o.lr_step_iterations.to_string()),
            ("train.max_iterations", "finetune.max_iterations", o.max_iterations.to_string()),
        ];
        for (a, b, val) in keys {
            v.push((if prefix == "train" { a } else { b }, val));
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(profile: Profile) -> Self {
        RunConfig {
            values: defaults(profile).into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// Builds a config from optional file text plus overrides, applied in
    /// that order. A `profile` key in the file or the overrides picks the
    /// defaults everything else starts from.
    pub fn load(file_text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = Vec::new();
        if let Some(text) = file_text {
            pairs.extend(parse_pairs(text)?);
        }
        pairs.extend(overrides.iter().cloned());
        let profile = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "profile")
            .map(|(_, v)| v.parse())
            .transpose()?
            .unwrap_or(Profile::Toy);
        let mut cfg = RunConfig::new(profile);
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(Error::Config(format!("unknown config key '{key}'"))),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("config key '{key}' has no default"))
    }

    fn typed<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("bad value '{}' for {key}", self.get(key))))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.typed(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.typed(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.typed(key)
    }

    pub fn profile(&self) -> Profile {
        self.get("profile").parse().unwrap_or(Profile::Toy)
    }

    pub fn seed(&self) -> u64 {
        self.u64("seed").unwrap_or(1)
    }

    /// Checks that every value parses.
    pub fn validate(&self) -> Result<()> {
        self.get("profile").parse::<Profile>()?;
        self.u64("seed")?;
        self.input_mode()?;
        self.model_config()?;
        self.optimizer("train")?.validate()?;
        self.optimizer("finetune")?.validate()?;
        self.sampling()?;
        self.parse_config()?;
        self.window_config()?;
        self.eval_config()?.rule.validate()?;
        for k in ["synth.categories", "synth.clips_per_category", "synth.videos", "synth.video_categories"] {
            self.usize(k)?;
        }
        for k in ["synth.train_fraction", "synth.video_train_fraction"] {
            self.f64(k)?;
        }
        Ok(())
    }

    /// The effective configuration, one sorted `key = value` line each. Fed
    /// back through [`RunConfig::load`] it reproduces this config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn write_echo(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("effective_config.txt"), self.to_text())?;
        Ok(())
    }

    pub fn flow(&self) -> Result<FlowParams> {
        let p = FlowParams {
            alpha: self.f64("flow.alpha")?,
            iterations: self.usize("flow.iterations")?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn input_mode(&self) -> Result<InputMode> {
        match self.get("input") {
            "appearance_motion" => Ok(InputMode::AppearanceMotion(self.flow()?)),
            "gray" => Ok(InputMode::GrayOnly),
            other => Err(Error::Config(format!("input must be appearance_motion or gray, got '{other}'"))),
        }
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let base = match self.profile() {
            Profile::Paper => ModelConfig::paper(),
            Profile::Toy => ModelConfig::toy(),
        };
        let loc_mode = match self.get("model.loc_mode") {
            "normalized" => LocMode::Normalized,
            "raw" => LocMode::RawPixels,
            other => return Err(Error::Config(format!("model.loc_mode must be normalized or raw, got '{other}'"))),
        };
        Ok(ModelConfig {
            lambda1: self.f64("model.lambda1")?,
            lambda2: self.f64("model.lambda2")?,
            beta: self.f64("model.beta")?,
            num_categories: self.usize("synth.categories")?,
            loc_mode,
            ..base
        })
    }

    /// `prefix` is `train` or `finetune`.
    pub fn optimizer(&self, prefix: &str) -> Result<OptimizerConfig> {
        let k = |name: &str| format!("{prefix}.{name}");
        Ok(OptimizerConfig {
            learning_rate: self.f64(&k("learning_rate"))?,
            momentum: self.f64(&k("momentum"))?,
            batch_size: self.usize(&k("batch_size"))?,
            lr_decay_factor: self.f64(&k("lr_decay_factor"))?,
            lr_step_iterations: self.usize(&k("lr_step_iterations"))?,
            max_iterations: self.usize(&k("max_iterations"))?,
        })
    }

    pub fn sampling(&self) -> Result<ProposalSampling> {
        Ok(ProposalSampling {
            positive_iou: self.f64("finetune.positive_iou")?,
            background_iou: self.f64("finetune.background_iou")?,
            background_ratio: self.f64("finetune.background_ratio")?,
            include_ground_truth: true,
        })
    }

    pub fn parse_config(&self) -> Result<ParseConfig> {
        Ok(ParseConfig {
            input: self.input_mode()?,
            nms_iou: self.f64("parse.nms_iou")?,
            batch_size: self.usize("parse.batch_size")?,
        })
    }

    pub fn window_config(&self) -> Result<WindowConfig> {
        let s = self.f64("parse.stride")?;
        Ok(WindowConfig {
            stride: [s; 3],
            ..WindowConfig::default()
        })
    }

    pub fn eval_config(&self) -> Result<EvalConfig> {
        Ok(EvalConfig {
            rule: MatchRule {
                precision_fraction: self.f64("eval.precision_fraction")?,
                recall_fraction: self.f64("eval.recall_fraction")?,
            },
            hit_threshold: self.f64("eval.hit_threshold")?,
            ..EvalConfig::default()
        })
    }

    /// The first `n` motion programs, one per category.
    pub fn programs(&self, key: &str) -> Result<Vec<MotionProgram>> {
        let n = self.usize(key)?;
        if n == 0 || n > MotionProgram::ALL.len() {
            return Err(Error::arg(format!("{key} must be between 1 and {}, got {n}", MotionProgram::ALL.len())));
        }
        Ok(MotionProgram::ALL[..n].to_vec())
    }
}

/// `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected 'key = value', got '{line}'")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
