//! The four-head spatio-temporal network.
//!
//! ```text
//! clip ─ [conv → relu (→ pool)]×L ─ flatten ─ FC1 → relu ─┬─ H1 head (sigmoid)
//!                                                         └─ FC2 → relu ─┬─ loc head
//!                                                                        ├─ class head (softmax)
//!                                                                        └─ H2 head (sigmoid)
//! ```

use crate::error::{Error, Result};
use crate::layers::activation::{relu_backward, relu_forward, sigmoid, softmax_row};
use crate::layers::conv::{conv3d_backward, conv3d_backward_params, conv3d_forward};
use crate::layers::linear::{fc_backward, fc_forward};
use crate::layers::loss::{bbox_euclidean_loss, multilabel_cross_entropy, softmax_cross_entropy};
use crate::layers::optim::{sgd_momentum_step, OptimizerConfig};
use crate::layers::params::LayerParams;
use crate::layers::pool::{maxpool3d_backward, maxpool3d_forward};
use crate::model::config::ModelConfig;
use crate::rng;
use crate::tensor::Tensor;

/// Per-sample predictions of the four heads.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub loc: [f32; 2],
    pub class_probs: Vec<f32>,
    pub h1_probs: Vec<f32>,
    pub h2_probs: Vec<f32>,
    pub class_logits: Vec<f32>,
}

impl ModelOutput {
    /// Index of the most probable class (lowest index on ties).
    pub fn argmax_class(&self) -> usize {
        argmax(&self.class_probs)
    }
}

pub(crate) fn argmax(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best
}

/// Supervision for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub category: usize,
    pub h1: Vec<bool>,
    pub h2: Vec<bool>,
    pub loc: [f32; 2],
}

/// Per-head batch-mean losses and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub cat: f64,
    pub h1: f64,
    pub h2: f64,
    pub bbox: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        LossWeights {
            lambda1: cfg.lambda1,
            lambda2: cfg.lambda2,
            beta: cfg.beta,
        }
    }
}

/// `L = L_cat + λ1 L_H1 + λ2 L_H2 + β L_bbox`, each term the batch mean of
/// its per-sample loss.
pub fn joint_loss(outputs: &[ModelOutput], targets: &[Target], weights: &LossWeights) -> Result<LossBreakdown> {
    Ok(joint_loss_with_grads(outputs, targets, weights)?.0)
}

pub(crate) struct HeadGrads {
    loc: Tensor,
    cls: Tensor,
    h1: Tensor,
    h2: Tensor,
}

pub(crate) fn joint_loss_with_grads(
    outputs: &[ModelOutput],
    targets: &[Target],
    w: &LossWeights,
) -> Result<(LossBreakdown, HeadGrads)> {
    if outputs.is_empty() || outputs.len() != targets.len() {
        return Err(Error::arg(format!(
            "{} outputs vs {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    let n = outputs.len();
    let classes = outputs[0].class_logits.len();
    let (nh1, nh2) = (outputs[0].h1_probs.len(), outputs[0].h2_probs.len());
    for t in targets {
        if t.h1.len() != nh1 || t.h2.len() != nh2 {
            return Err(Error::arg(format!(
                "target carries {}+{} attribute bits, model emits {nh1}+{nh2}",
                t.h1.len(),
                t.h2.len()
            )));
        }
        if !t.loc.iter().all(|v| v.is_finite()) {
            return Err(Error::arg("target location is not finite"));
        }
    }
    let logits = Tensor::from_parts(
        &[n, classes],
        outputs.iter().flat_map(|o| o.class_logits.iter().copied()).collect(),
    );
    let labels: Vec<usize> = targets.iter().map(|t| t.category).collect();
    let (cat, gcls) = softmax_cross_entropy(&logits, &labels)?;

    let nf = n as f64;
    let mut b = LossBreakdown {
        cat,
        ..Default::default()
    };
    let mut gh1 = Vec::with_capacity(n * nh1);
    let mut gh2 = Vec::with_capacity(n * nh2);
    let mut gloc = Vec::with_capacity(n * 2);
    for (o, t) in outputs.iter().zip(targets) {
        let (l1, _) = multilabel_cross_entropy(&Tensor::from_parts(&[nh1], o.h1_probs.clone()), &t.h1)?;
        let (l2, _) = multilabel_cross_entropy(&Tensor::from_parts(&[nh2], o.h2_probs.clone()), &t.h2)?;
        let (lb, gb) = bbox_euclidean_loss(&o.loc, &t.loc)?;
        b.h1 += l1 / nf;
        b.h2 += l2 / nf;
        b.bbox += lb / nf;
        // sigmoid and cross-entropy fused: d/dz = (p - t) / N_attr
        let s1 = w.lambda1 / (nf * nh1 as f64);
        gh1.extend(o.h1_probs.iter().zip(&t.h1).map(|(&p, &t)| ((f64::from(p) - f64::from(u8::from(t))) * s1) as f32));
        let s2 = w.lambda2 / (nf * nh2 as f64);
        gh2.extend(o.h2_probs.iter().zip(&t.h2).map(|(&p, &t)| ((f64::from(p) - f64::from(u8::from(t))) * s2) as f32));
        gloc.extend(gb.iter().map(|&g| (f64::from(g) * w.beta / nf) as f32));
    }
    b.total = b.cat + w.lambda1 * b.h1 + w.lambda2 * b.h2 + w.beta * b.bbox;
    Ok((
        b,
        HeadGrads {
            loc: Tensor::from_parts(&[n, 2], gloc),
            cls: gcls,
            h1: Tensor::from_parts(&[n, nh1], gh1),
            h2: Tensor::from_parts(&[n, nh2], gh2),
        },
    ))
}

/// A fully connected trunk layer, optionally factorized into two chained
/// linear maps after SVD compression.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FcLayer {
    Full(LayerParams),
    Factored { first: LayerParams, second: LayerParams },
}

struct FcTrace {
    input: Tensor,
    mid: Option<Tensor>,
}

impl FcLayer {
    fn forward(&self, x: &Tensor) -> Result<(Tensor, FcTrace)> {
        match self {
            FcLayer::Full(p) => Ok((
                fc_forward(x, p)?,
                FcTrace {
                    input: x.clone(),
                    mid: None,
                },
            )),
            FcLayer::Factored { first, second } => {
                let mid = fc_forward(x, first)?;
                let out = fc_forward(&mid, second)?;
                Ok((
                    out,
                    FcTrace {
                        input: x.clone(),
                        mid: Some(mid),
                    },
                ))
            }
        }
    }

    fn backward(&mut self, trace: &FcTrace, grad: &Tensor) -> Result<Tensor> {
        match self {
            FcLayer::Full(p) => fc_backward(&trace.input, p, grad),
            FcLayer::Factored { first, second } => {
                let mid = trace.mid.as_ref().expect("factored layer trace");
                let g = fc_backward(mid, second, grad)?;
                fc_backward(&trace.input, first, &g)
            }
        }
    }

    fn out_dim(&self) -> usize {
        match self {
            FcLayer::Full(p) => p.weights().dims()[0],
            FcLayer::Factored { second, .. } => second.weights().dims()[0],
        }
    }
}

pub(crate) struct Trace {
    conv_in: Vec<Tensor>,
    conv_pre: Vec<Tensor>,
    pools: Vec<Option<(Vec<usize>, Vec<usize>)>>,
    trunk_dims: Vec<usize>,
    fc1: FcTrace,
    z1: Tensor,
    a1: Tensor,
    fc2: FcTrace,
    z2: Tensor,
    a2: Tensor,
}

/// The network with all its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionNet {
    pub(crate) config: ModelConfig,
    pub(crate) convs: Vec<LayerParams>,
    pub(crate) fc1: FcLayer,
    pub(crate) fc2: FcLayer,
    pub(crate) head_loc: LayerParams,
    pub(crate) head_cls: LayerParams,
    pub(crate) head_h1: LayerParams,
    pub(crate) head_h2: LayerParams,
}

fn init_fc(out: usize, inp: usize, seed: u64, label: &str) -> Result<LayerParams> {
    let mut r = rng::stream(seed, rng::stream_id(label, 0));
    LayerParams::init_uniform(&[out, inp], inp, out, &mut r)
}

impl ActionNet {
    /// Builds and initializes the network; identical seeds give identical
    /// parameters.
    pub fn build(config: ModelConfig, seed: u64) -> Result<Self> {
        let flat = config.flat_dim()?;
        let mut convs = Vec::with_capacity(config.conv_specs.len());
        for (i, spec) in config.conv_specs.iter().enumerate() {
            let k: usize = spec.kernel.iter().product();
            let mut r = rng::stream(seed, rng::stream_id("conv", i as u64));
            convs.push(LayerParams::init_uniform(
                &spec.weight_dims(),
                spec.in_channels * k,
                spec.out_channels * k,
                &mut r,
            )?);
        }
        let fc = |out: usize, inp: usize, label: &str| -> Result<FcLayer> {
            match config.fc_rank {
                None => Ok(FcLayer::Full(init_fc(out, inp, seed, label)?)),
                Some(r) => {
                    if r == 0 || r > out.min(inp) {
                        return Err(Error::Config(format!("fc_rank {r} outside 1..={} for {label}", out.min(inp))));
                    }
                    Ok(FcLayer::Factored {
                        first: init_fc(r, inp, seed, &format!("{label}.first"))?,
                        second: init_fc(out, r, seed, &format!("{label}.second"))?,
                    })
                }
            }
        };
        let fc1 = fc(config.fc1_dim, flat, "fc1")?;
        let fc2 = fc(config.fc2_dim, config.fc1_dim, "fc2")?;
        let head_loc = init_fc(2, config.fc2_dim, seed, "head_loc")?;
        let head_cls = init_fc(config.num_classes(), config.fc2_dim, seed, "head_cls")?;
        let head_h1 = init_fc(config.num_h1, config.fc1_dim, seed, "head_h1")?;
        let head_h2 = init_fc(config.num_h2, config.fc2_dim, seed, "head_h2")?;
        Ok(ActionNet {
            config,
            convs,
            fc1,
            fc2,
            head_loc,
            head_cls,
            head_h1,
            head_h2,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Names and parameters of every learnable layer, in a fixed order.
    pub fn named_params(&self) -> Vec<(String, &LayerParams)> {
        let mut v: Vec<(String, &LayerParams)> = self
            .convs
            .iter()
            .enumerate()
            .map(|(i, p)| (ModelConfig::conv_name(i), p))
            .collect();
        for (name, fc) in [("fc1", &self.fc1), ("fc2", &self.fc2)] {
            match fc {
                FcLayer::Full(p) => v.push((name.to_string(), p)),
                FcLayer::Factored { first, second } => {
                    v.push((format!("{name}.first"), first));
                    v.push((format!("{name}.second"), second));
                }
            }
        }
        v.push(("head_loc".into(), &self.head_loc));
        v.push(("head_cls".into(), &self.head_cls));
        v.push(("head_h1".into(), &self.head_h1));
        v.push(("head_h2".into(), &self.head_h2));
        v
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut LayerParams)> {
        let mut v: Vec<(String, &mut LayerParams)> = self
            .convs
            .iter_mut()
            .enumerate()
            .map(|(i, p)| (ModelConfig::conv_name(i), p))
            .collect();
        for (name, fc) in [("fc1", &mut self.fc1), ("fc2", &mut self.fc2)] {
            match fc {
                FcLayer::Full(p) => v.push((name.to_string(), p)),
                FcLayer::Factored { first, second } => {
                    v.push((format!("{name}.first"), first));
                    v.push((format!("{name}.second"), second));
                }
            }
        }
        v.push(("head_loc".into(), &mut self.head_loc));
        v.push(("head_cls".into(), &mut self.head_cls));
        v.push(("head_h1".into(), &mut self.head_h1));
        v.push(("head_h2".into(), &mut self.head_h2));
        v
    }

    pub fn num_params(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.num_params()).sum()
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.named_params_mut() {
            p.zero_grad();
        }
    }

    /// One optimizer step over every layer.
    pub fn sgd_step(&mut self, config: &OptimizerConfig, lr: f64) {
        for (_, p) in self.named_params_mut() {
            sgd_momentum_step(p, config, lr);
        }
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        let d = batch.dims();
        if d.len() != 5 || d[1..] != self.config.input_shape {
            return Err(Error::shape(format!(
                "batch {} does not match model input (N,{:?})",
                batch.shape(),
                self.config.input_shape
            )));
        }
        Ok(d[0])
    }

    /// Feature maps of a named trunk stage (`conv<i>` after ReLU or
    /// `pool<j>`), shape `(N, C, T, H, W)`.
    pub fn feature_maps(&self, batch: &Tensor, layer: &str) -> Result<Tensor> {
        self.check_batch(batch)?;
        let mut x = batch.clone();
        let mut pool_no = 0;
        for (i, (spec, p)) in self.config.conv_specs.iter().zip(&self.convs).enumerate() {
            x = relu_forward(&conv3d_forward(&x, spec, p)?);
            if layer == ModelConfig::conv_name(i) {
                return Ok(x);
            }
            if self.config.pool_after.contains(&i) {
                pool_no += 1;
                x = maxpool3d_forward(&x, self.config.pool_kernel, self.config.pool_stride)?.0;
                if layer == format!("pool{pool_no}") {
                    return Ok(x);
                }
            }
        }
        Err(Error::arg(format!(
            "unknown layer '{layer}'; valid names: {}",
            self.trunk_layer_names().join(", ")
        )))
    }

    pub fn trunk_layer_names(&self) -> Vec<String> {
        self.config
            .layer_report()
            .map(|r| r.into_iter().filter(|l| l.dims.len() == 4).map(|l| l.name).collect())
            .unwrap_or_default()
    }

    pub fn forward(&self, batch: &Tensor) -> Result<Vec<ModelOutput>> {
        Ok(self.forward_trace(batch)?.0)
    }

    pub(crate) fn forward_trace(&self, batch: &Tensor) -> Result<(Vec<ModelOutput>, Trace)> {
        let n = self.check_batch(batch)?;
        let mut x = batch.clone();
        let mut conv_in = Vec::new();
        let mut conv_pre = Vec::new();
        let mut pools = Vec::new();
        for (i, (spec, p)) in self.config.conv_specs.iter().zip(&self.convs).enumerate() {
            let z = conv3d_forward(&x, spec, p)?;
            let a = relu_forward(&z);
            conv_in.push(x);
            conv_pre.push(z);
            if self.config.pool_after.contains(&i) {
                let (pooled, arg) = maxpool3d_forward(&a, self.config.pool_kernel, self.config.pool_stride)?;
                pools.push(Some((a.dims().to_vec(), arg)));
                x = pooled;
            } else {
                pools.push(None);
                x = a;
            }
        }
        let trunk_dims = x.dims().to_vec();
        let flat_dim = x.numel() / n;
        let flat = x.reshape(&[n, flat_dim])?;
        let (z1, fc1) = self.fc1.forward(&flat)?;
        let a1 = relu_forward(&z1);
        let (z2, fc2) = self.fc2.forward(&a1)?;
        let a2 = relu_forward(&z2);

        let loc = fc_forward(&a2, &self.head_loc)?;
        let cls = fc_forward(&a2, &self.head_cls)?;
        let h1 = fc_forward(&a1, &self.head_h1)?;
        let h2 = fc_forward(&a2, &self.head_h2)?;
        let (kc, k1, k2) = (cls.dims()[1], h1.dims()[1], h2.dims()[1]);
        let sig = |row: &[f32]| -> Vec<f32> { row.iter().map(|&z| sigmoid(f64::from(z)) as f32).collect() };
        let outputs = (0..n)
            .map(|s| {
                let logits = cls.data()[s * kc..(s + 1) * kc].to_vec();
                ModelOutput {
                    loc: [loc.data()[2 * s], loc.data()[2 * s + 1]],
                    class_probs: softmax_row(&logits).into_iter().map(|p| p as f32).collect(),
                    h1_probs: sig(&h1.data()[s * k1..(s + 1) * k1]),
                    h2_probs: sig(&h2.data()[s * k2..(s + 1) * k2]),
                    class_logits: logits,
                }
            })
            .collect();
        Ok((
            outputs,
            Trace {
                conv_in,
                conv_pre,
                pools,
                trunk_dims,
                fc1,
                z1,
                a1,
                fc2,
                z2,
                a2,
            },
        ))
    }

    pub(crate) fn backward(&mut self, trace: Trace, g: &HeadGrads) -> Result<()> {
        let mut da2 = fc_backward(&trace.a2, &mut self.head_loc, &g.loc)?;
        da2 = da2.add(&fc_backward(&trace.a2, &mut self.head_cls, &g.cls)?)?;
        da2 = da2.add(&fc_backward(&trace.a2, &mut self.head_h2, &g.h2)?)?;
        let dz2 = relu_backward(&trace.z2, &da2)?;
        let mut da1 = self.fc2.backward(&trace.fc2, &dz2)?;
        da1 = da1.add(&fc_backward(&trace.a1, &mut self.head_h1, &g.h1)?)?;
        let dz1 = relu_backward(&trace.z1, &da1)?;
        let mut grad = self.fc1.backward(&trace.fc1, &dz1)?.reshape(&trace.trunk_dims)?;
        for i in (0..self.convs.len()).rev() {
            if let Some((dims, arg)) = &trace.pools[i] {
                grad = maxpool3d_backward(dims, arg, &grad)?;
            }
            grad = relu_backward(&trace.conv_pre[i], &grad)?;
            let spec = self.config.conv_specs[i];
            if i == 0 {
                conv3d_backward_params(&trace.conv_in[0], &spec, &mut self.convs[0], &grad)?;
            } else {
                grad = conv3d_backward(&trace.conv_in[i], &spec, &mut self.convs[i], &grad)?;
            }
        }
        Ok(())
    }

    /// Forward, joint loss and backward for one batch. Gradients are added
    /// to the parameters' accumulators.
    pub fn accumulate_gradients(&mut self, batch: &Tensor, targets: &[Target]) -> Result<(LossBreakdown, Vec<ModelOutput>)> {
        let (outputs, trace) = self.forward_trace(batch)?;
        let (breakdown, grads) = joint_loss_with_grads(&outputs, targets, &LossWeights::from_config(&self.config))?;
        self.backward(trace, &grads)?;
        Ok((breakdown, outputs))
    }

    /// Fresh category head of a new width; every other parameter is kept.
    pub fn reinit_class_head(&mut self, num_categories: usize, include_background: bool, seed: u64) -> Result<()> {
        if num_categories == 0 {
            return Err(Error::Config("num_categories must be positive".into()));
        }
        self.config.num_categories = num_categories;
        self.config.include_background = include_background;
        self.head_cls = init_fc(self.config.num_classes(), self.fc2.out_dim(), seed, "head_cls")?;
        Ok(())
    }
}
