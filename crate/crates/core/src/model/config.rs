//! Architecture description, the shipped profiles and their canonical text
//! form (stored verbatim inside checkpoints).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::layers::conv::Conv3DSpec;
use crate::layers::pool::pool_extents;

pub const NUM_H1: usize = 19;
pub const NUM_H2: usize = 14;

/// Units of the location head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocMode {
    /// Offsets divided by the input crop's width / height.
    Normalized,
    /// Offsets in pixels of the source clip.
    RawPixels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub conv_specs: Vec<Conv3DSpec>,
    /// Zero-based indices of the conv layers whose (rectified) output is
    /// max-pooled.
    pub pool_after: Vec<usize>,
    pub pool_kernel: [usize; 3],
    pub pool_stride: [usize; 3],
    pub fc1_dim: usize,
    pub fc2_dim: usize,
    /// Rank of the factorized FC1/FC2 weights after SVD compression.
    pub fc_rank: Option<usize>,
    pub num_categories: usize,
    pub include_background: bool,
    pub num_h1: usize,
    pub num_h2: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
    /// `(C, T, H, W)` of one input clip.
    pub input_shape: [usize; 4],
    pub loc_mode: LocMode,
}

/// Output extents of one named stage, `(C, T, H, W)` or `(D,)` for FC stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShape {
    pub name: String,
    pub dims: Vec<usize>,
}

impl ModelConfig {
    /// Six conv layers and four pools on a 3×32×112×112 input. Conv2 emits
    /// 128 channels at 16×56×56.
    pub fn paper() -> Self {
        let c = Conv3DSpec::same;
        ModelConfig {
            conv_specs: vec![c(3, 64, 3), c(64, 128, 3), c(128, 256, 3), c(256, 256, 3), c(256, 256, 3), c(256, 256, 3)],
            pool_after: vec![0, 1, 3, 5],
            pool_kernel: [2; 3],
            pool_stride: [2; 3],
            fc1_dim: 4096,
            fc2_dim: 4096,
            fc_rank: None,
            num_categories: 100,
            include_background: false,
            num_h1: NUM_H1,
            num_h2: NUM_H2,
            lambda1: 0.5,
            lambda2: 0.5,
            beta: 0.5,
            input_shape: [3, 32, 112, 112],
            loc_mode: LocMode::Normalized,
        }
    }

    /// Desk-scale profile: 3×8×32×32 input, three conv+pool stages.
    pub fn toy() -> Self {
        let c = Conv3DSpec::same;
        ModelConfig {
            conv_specs: vec![c(3, 8, 3), c(8, 16, 3), c(16, 16, 3)],
            pool_after: vec![0, 1, 2],
            fc1_dim: 64,
            fc2_dim: 64,
            num_categories: 10,
            input_shape: [3, 8, 32, 32],
            ..Self::paper()
        }
    }

    /// Minimal profile used by end-to-end gradient checks.
    pub fn tiny() -> Self {
        let c = Conv3DSpec::same;
        ModelConfig {
            conv_specs: vec![c(3, 4, 3), c(4, 4, 3)],
            pool_after: vec![0, 1],
            fc1_dim: 16,
            fc2_dim: 12,
            num_categories: 3,
            input_shape: [3, 4, 8, 8],
            ..Self::paper()
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "toy" => Ok(Self::toy()),
            "tiny" => Ok(Self::tiny()),
            other => Err(Error::Config(format!("unknown profile '{other}' (expected paper, toy or tiny)"))),
        }
    }

    /// Width of the category head.
    pub fn num_classes(&self) -> usize {
        self.num_categories + usize::from(self.include_background)
    }

    /// Index of the background class, when present.
    pub fn background_class(&self) -> Option<usize> {
        self.include_background.then_some(self.num_categories)
    }

    pub fn conv_name(i: usize) -> String {
        format!("conv{}", i + 1)
    }

    /// Shapes of every stage, checking the geometry as it goes.
    pub fn layer_report(&self) -> Result<Vec<LayerShape>> {
        if self.conv_specs.is_empty() {
            return Err(Error::Config("at least one conv layer is required".into()));
        }
        if self.input_shape.contains(&0) {
            return Err(Error::Config("input extents must be positive".into()));
        }
        for &p in &self.pool_after {
            if p >= self.conv_specs.len() {
                return Err(Error::Config(format!("pool position {p} has no conv layer")));
            }
        }
        let mut report = Vec::new();
        let mut channels = self.input_shape[0];
        let mut ext = [self.input_shape[1], self.input_shape[2], self.input_shape[3]];
        let mut pool_no = 0;
        for (i, spec) in self.conv_specs.iter().enumerate() {
            let name = Self::conv_name(i);
            if spec.in_channels != channels {
                return Err(Error::Config(format!(
                    "layer {name}: expects {} input channels but receives {channels}",
                    spec.in_channels
                )));
            }
            ext = spec
                .output_extents(ext)
                .map_err(|e| Error::Config(format!("layer {name}: {e}")))?;
            channels = spec.out_channels;
            report.push(LayerShape {
                name,
                dims: vec![channels, ext[0], ext[1], ext[2]],
            });
            if self.pool_after.contains(&i) {
                pool_no += 1;
                let name = format!("pool{pool_no}");
                ext = pool_extents(ext, self.pool_kernel, self.pool_stride)
                    .map_err(|e| Error::Config(format!("layer {name}: {e}")))?;
                report.push(LayerShape {
                    name,
                    dims: vec![channels, ext[0], ext[1], ext[2]],
                });
            }
        }
        if self.fc1_dim == 0 || self.fc2_dim == 0 {
            return Err(Error::Config("FC widths must be positive".into()));
        }
        if self.num_categories == 0 || self.num_h1 == 0 || self.num_h2 == 0 {
            return Err(Error::Config("head widths must be positive".into()));
        }
        if let Some(r) = self.fc_rank {
            let limit = self.fc1_dim.min(self.fc2_dim).min(self.flat_dim_from(channels, ext));
            if r == 0 || r > limit {
                return Err(Error::Config(format!("fc_rank {r} outside 1..={limit}")));
            }
        }
        report.push(LayerShape {
            name: "fc1".into(),
            dims: vec![self.fc1_dim],
        });
        report.push(LayerShape {
            name: "fc2".into(),
            dims: vec![self.fc2_dim],
        });
        Ok(report)
    }

    fn flat_dim_from(&self, channels: usize, ext: [usize; 3]) -> usize {
        channels * ext.iter().product::<usize>()
    }

    /// Length of the flattened trunk output that feeds FC1.
    pub fn flat_dim(&self) -> Result<usize> {
        let report = self.layer_report()?;
        let last = &report[report.len() - 3];
        Ok(last.dims.iter().product())
    }

    pub fn validate(&self) -> Result<()> {
        self.layer_report().map(|_| ())
    }

    /// Canonical `key = value` text, one key per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "input_shape = {}", join(&self.input_shape));
        for c in &self.conv_specs {
            let mut v = vec![c.in_channels, c.out_channels];
            v.extend(c.kernel);
            v.extend(c.stride);
            v.extend(c.padding);
            let _ = writeln!(s, "conv = {}", join(&v));
        }
        let _ = writeln!(s, "pool_after = {}", join(&self.pool_after));
        let _ = writeln!(s, "pool_kernel = {}", join(&self.pool_kernel));
        let _ = writeln!(s, "pool_stride = {}", join(&self.pool_stride));
        let _ = writeln!(s, "fc1_dim = {}", self.fc1_dim);
        let _ = writeln!(s, "fc2_dim = {}", self.fc2_dim);
        let rank = self.fc_rank.map_or("none".to_string(), |r| r.to_string());
        let _ = writeln!(s, "fc_rank = {rank}");
        let _ = writeln!(s, "num_categories = {}", self.num_categories);
        let _ = writeln!(s, "include_background = {}", self.include_background);
        let _ = writeln!(s, "num_h1 = {}", self.num_h1);
        let _ = writeln!(s, "num_h2 = {}", self.num_h2);
        let _ = writeln!(s, "lambda1 = {:?}", self.lambda1);
        let _ = writeln!(s, "lambda2 = {:?}", self.lambda2);
        let _ = writeln!(s, "beta = {:?}", self.beta);
        let mode = match self.loc_mode {
            LocMode::Normalized => "normalized",
            LocMode::RawPixels => "raw_pixels",
        };
        let _ = writeln!(s, "loc_mode = {mode}");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ModelConfig {
            conv_specs: Vec::new(),
            pool_after: Vec::new(),
            ..Self::paper()
        };
        let mut seen_input = false;
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::parse(line_no, "expected 'key = value'"))?;
            let usizes = |v: &str| -> Result<Vec<usize>> {
                v.split_whitespace()
                    .map(|x| x.parse::<usize>().map_err(|e| Error::parse(line_no, format!("{key}: {e}"))))
                    .collect()
            };
            let fixed3 = |v: &str| -> Result<[usize; 3]> {
                let xs = usizes(v)?;
                xs.try_into().map_err(|_| Error::parse(line_no, format!("{key}: expected 3 integers")))
            };
            let float = |v: &str| v.parse::<f64>().map_err(|e| Error::parse(line_no, format!("{key}: {e}")));
            let int = |v: &str| v.parse::<usize>().map_err(|e| Error::parse(line_no, format!("{key}: {e}")));
            match key {
                "input_shape" => {
                    let xs = usizes(value)?;
                    cfg.input_shape = xs
                        .try_into()
                        .map_err(|_| Error::parse(line_no, "input_shape: expected 4 integers"))?;
                    seen_input = true;
                }
                "conv" => {
                    let v = usizes(value)?;
                    if v.len() != 11 {
                        return Err(Error::parse(line_no, "conv: expected 11 integers"));
                    }
                    cfg.conv_specs.push(Conv3DSpec {
                        in_channels: v[0],
                        out_channels: v[1],
                        kernel: [v[2], v[3], v[4]],
                        stride: [v[5], v[6], v[7]],
                        padding: [v[8], v[9], v[10]],
                    });
                }
                "pool_after" => cfg.pool_after = usizes(value)?,
                "pool_kernel" => cfg.pool_kernel = fixed3(value)?,
                "pool_stride" => cfg.pool_stride = fixed3(value)?,
                "fc1_dim" => cfg.fc1_dim = int(value)?,
                "fc2_dim" => cfg.fc2_dim = int(value)?,
                "fc_rank" => cfg.fc_rank = if value == "none" { None } else { Some(int(value)?) },
                "num_categories" => cfg.num_categories = int(value)?,
                "include_background" => {
                    cfg.include_background = value
                        .parse()
                        .map_err(|_| Error::parse(line_no, "include_background: expected true/false"))?
                }
                "num_h1" => cfg.num_h1 = int(value)?,
                "num_h2" => cfg.num_h2 = int(value)?,
                "lambda1" => cfg.lambda1 = float(value)?,
                "lambda2" => cfg.lambda2 = float(value)?,
                "beta" => cfg.beta = float(value)?,
                "loc_mode" => {
                    cfg.loc_mode = match value {
                        "normalized" => LocMode::Normalized,
                        "raw_pixels" => LocMode::RawPixels,
                        other => return Err(Error::parse(line_no, format!("unknown loc_mode '{other}'"))),
                    }
                }
                other => return Err(Error::parse(line_no, format!("unknown key '{other}'"))),
            }
        }
        if !seen_input || cfg.conv_specs.is_empty() {
            return Err(Error::Config("model config needs input_shape and at least one conv".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
