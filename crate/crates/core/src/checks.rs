//! Gradient checks of every layer and of the whole network, packaged as a
//! suite that reports instead of panicking.

use crate::error::Result;
use crate::gradcheck::{finite_difference_grad, finite_difference_grad_checked, relative_error, relative_error_masked};
use crate::layers::{
    conv3d_backward, conv3d_forward, fc_backward, fc_forward, maxpool3d_backward, maxpool3d_forward, multilabel_cross_entropy,
    relu_backward, relu_forward, softmax_cross_entropy, Conv3DSpec, LayerParams,
};
use crate::model::{joint_loss, ActionNet, LossWeights, ModelConfig, Target};
use crate::tensor::Tensor;

pub const LAYER_TOLERANCE: f64 = 1e-3;
pub const END_TO_END_TOLERANCE: f64 = 1e-2;

/// Signature of a convolution backward pass, so a broken one can be swapped
/// in to confirm the suite notices.
pub type ConvBackward = fn(&Tensor, &Conv3DSpec, &mut LayerParams, &Tensor) -> Result<Tensor>;

/// Worst relative error of one gradient over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub name: String,
    pub trials: usize,
    pub max_error: f64,
    pub tolerance: f64,
    /// Coordinates left out because the function has a kink next to them.
    pub skipped: usize,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

struct Acc(Vec<GradCheck>);

impl Acc {
    fn record(&mut self, name: &str, err: f64, tolerance: f64, skipped: usize) {
        match self.0.iter_mut().find(|c| c.name == name) {
            Some(c) => {
                c.trials += 1;
                c.max_error = c.max_error.max(err);
                c.skipped += skipped;
            }
            None => self.0.push(GradCheck {
                name: name.to_string(),
                trials: 1,
                max_error: err,
                tolerance,
                skipped,
            }),
        }
    }
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

/// Layer checks with the given convolution backward.
pub fn layer_checks_with(seed: u64, trials: usize, conv_backward: ConvBackward) -> Result<Vec<GradCheck>> {
    let mut acc = Acc(Vec::new());
    let tol = LAYER_TOLERANCE;
    for trial in 0..trials as u64 {
        let s = seed.wrapping_mul(1000).wrapping_add(trial * 17);

        let spec = if trial % 2 == 0 {
            Conv3DSpec::same(2, 2, 3)
        } else {
            Conv3DSpec {
                in_channels: 1,
                out_channels: 2,
                kernel: [2, 2, 3],
                stride: [1, 2, 1],
                padding: [0, 1, 1],
            }
        };
        let x = Tensor::random_uniform(&[1, spec.in_channels, 3, 4, 3], -1.0, 1.0, s)?;
        let p = LayerParams::new(
            Tensor::random_uniform(&spec.weight_dims(), -1.0, 1.0, s + 1)?,
            Tensor::random_uniform(&[spec.out_channels], -1.0, 1.0, s + 2)?,
        );
        let r = Tensor::random_uniform(conv3d_forward(&x, &spec, &p)?.dims(), -1.0, 1.0, s + 3)?;
        let mut pg = p.clone();
        let gx = conv_backward(&x, &spec, &mut pg, &r)?;
        let fx = finite_difference_grad(|xx| Ok(dot(&conv3d_forward(xx, &spec, &p)?, &r)), &x, 1e-3)?;
        acc.record("conv3d.input", relative_error(gx.data(), fx.data()), tol, 0);
        let fw = finite_difference_grad(
            |w| Ok(dot(&conv3d_forward(&x, &spec, &LayerParams::new(w.clone(), p.bias().clone()))?, &r)),
            p.weights(),
            1e-3,
        )?;
        acc.record("conv3d.weights", relative_error(pg.grad_weights().data(), fw.data()), tol, 0);
        let fb = finite_difference_grad(
            |b| Ok(dot(&conv3d_forward(&x, &spec, &LayerParams::new(p.weights().clone(), b.clone()))?, &r)),
            p.bias(),
            1e-3,
        )?;
        acc.record("conv3d.bias", relative_error(pg.grad_bias().data(), fb.data()), tol, 0);

        // distinct values at least 0.01 apart keep every window's winner fixed
        let n = 2 * 4 * 4 * 4;
        let perm = Tensor::random_uniform(&[n], 0.0, 1.0, s + 4)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| perm.data()[a].total_cmp(&perm.data()[b]));
        let mut vals = vec![0f32; n];
        for (rank, &i) in order.iter().enumerate() {
            vals[i] = -1.0 + 2.0 * rank as f32 / n as f32;
        }
        let x = Tensor::from_vec(&[1, 2, 4, 4, 4], vals)?;
        let (y, arg) = maxpool3d_forward(&x, [2; 3], [2; 3])?;
        let r = Tensor::random_uniform(y.dims(), -1.0, 1.0, s + 5)?;
        let gx = maxpool3d_backward(x.dims(), &arg, &r)?;
        let fd = finite_difference_grad(|xx| Ok(dot(&maxpool3d_forward(xx, [2; 3], [2; 3])?.0, &r)), &x, 1e-3)?;
        acc.record("maxpool3d", relative_error(gx.data(), fd.data()), tol, 0);

        let x = Tensor::random_uniform(&[3, 5], -1.0, 1.0, s + 6)?;
        let p = LayerParams::new(Tensor::random_uniform(&[4, 5], -1.0, 1.0, s + 7)?, Tensor::random_uniform(&[4], -1.0, 1.0, s + 8)?);
        let r = Tensor::random_uniform(&[3, 4], -1.0, 1.0, s + 9)?;
        let mut pg = p.clone();
        let gx = fc_backward(&x, &mut pg, &r)?;
        let fx = finite_difference_grad(|xx| Ok(dot(&fc_forward(xx, &p)?, &r)), &x, 1e-3)?;
        acc.record("fc.input", relative_error(gx.data(), fx.data()), tol, 0);
        let fw = finite_difference_grad(|w| Ok(dot(&fc_forward(&x, &LayerParams::new(w.clone(), p.bias().clone()))?, &r)), p.weights(), 1e-3)?;
        acc.record("fc.weights", relative_error(pg.grad_weights().data(), fw.data()), tol, 0);
        let fb = finite_difference_grad(|b| Ok(dot(&fc_forward(&x, &LayerParams::new(p.weights().clone(), b.clone()))?, &r)), p.bias(), 1e-3)?;
        acc.record("fc.bias", relative_error(pg.grad_bias().data(), fb.data()), tol, 0);

        let x = Tensor::random_uniform(&[24], -1.0, 1.0, s + 10)?.map(|v| if v.abs() < 0.01 { v + 0.02_f32.copysign(v) } else { v });
        let r = Tensor::random_uniform(&[24], -1.0, 1.0, s + 11)?;
        let gx = relu_backward(&x, &r)?;
        let fd = finite_difference_grad(|xx| Ok(dot(&relu_forward(xx), &r)), &x, 1e-3)?;
        acc.record("relu", relative_error(gx.data(), fd.data()), tol, 0);

        let logits = Tensor::random_uniform(&[3, 6], -1.0, 1.0, s + 12)?;
        let labels = [trial as usize % 6, 2, 5];
        let (_, g) = softmax_cross_entropy(&logits, &labels)?;
        let fd = finite_difference_grad(|l| Ok(softmax_cross_entropy(l, &labels)?.0), &logits, 1e-3)?;
        acc.record("softmax_cross_entropy", relative_error(g.data(), fd.data()), tol, 0);

        let p = Tensor::random_uniform(&[7], 0.05, 0.95, s + 13)?;
        let t: Vec<bool> = (0..7).map(|i| (i + trial as usize) % 2 == 0).collect();
        let (_, g) = multilabel_cross_entropy(&p, &t)?;
        let fd = finite_difference_grad(|q| Ok(multilabel_cross_entropy(q, &t)?.0), &p, 1e-4)?;
        acc.record("multilabel_cross_entropy", relative_error(g.data(), fd.data()), tol, 0);
    }
    Ok(acc.0)
}

pub fn layer_checks(seed: u64, trials: usize) -> Result<Vec<GradCheck>> {
    layer_checks_with(seed, trials, conv3d_backward)
}

pub fn random_targets(cfg: &ModelConfig, n: usize, seed: u64) -> Result<Vec<Target>> {
    let width = cfg.num_h1 + cfg.num_h2 + 3;
    let bits = Tensor::random_uniform(&[n, width], 0.0, 1.0, seed)?;
    Ok(bits
        .data()
        .chunks(width)
        .enumerate()
        .map(|(i, r)| Target {
            category: i % cfg.num_classes(),
            h1: r[..cfg.num_h1].iter().map(|&v| v > 0.5).collect(),
            h2: r[cfg.num_h1..cfg.num_h1 + cfg.num_h2].iter().map(|&v| v > 0.5).collect(),
            loc: [r[width - 2] - 0.5, r[width - 1] - 0.5],
        })
        .collect())
}

/// Joint-loss gradient of every parameter tensor of a tiny network against
/// central differences. Coordinates next to a ReLU or pooling kink are
/// skipped and counted.
pub fn end_to_end(seed: u64) -> Result<Vec<GradCheck>> {
    let cfg = ModelConfig::tiny();
    let base = ActionNet::build(cfg.clone(), seed)?;
    let x = Tensor::random_uniform(&[2, 3, 4, 8, 8], -1.0, 1.0, seed + 100)?;
    let targets = random_targets(&cfg, 2, seed + 200)?;
    let mut analytic = base.clone();
    analytic.accumulate_gradients(&x, &targets)?;
    let w = LossWeights::from_config(&cfg);
    let names: Vec<String> = base.named_params().into_iter().map(|(n, _)| n).collect();
    let mut out = Vec::new();
    for (li, name) in names.iter().enumerate() {
        for part in 0..2 {
            let probe = |t: &Tensor| -> Result<f64> {
                let mut net = base.clone();
                let mut params = net.named_params_mut();
                let p = &mut params[li].1;
                if part == 0 {
                    p.weights_mut().copy_from_slice(t.data());
                } else {
                    p.bias_mut().copy_from_slice(t.data());
                }
                drop(params);
                Ok(joint_loss(&net.forward(&x)?, &targets, &w)?.total)
            };
            let params = base.named_params();
            let after = analytic.named_params();
            let (value, grad) = if part == 0 {
                (params[li].1.weights(), after[li].1.grad_weights())
            } else {
                (params[li].1.bias(), after[li].1.grad_bias())
            };
            let (fd, kinks) = finite_difference_grad_checked(probe, value, 3e-4)?;
            out.push(GradCheck {
                name: format!("{name}.{}", if part == 0 { "weights" } else { "bias" }),
                trials: 1,
                max_error: relative_error_masked(grad.data(), fd.data(), &kinks),
                tolerance: END_TO_END_TOLERANCE,
                skipped: kinks.iter().filter(|&&k| k).count(),
            });
        }
    }
    Ok(out)
}

/// [`end_to_end`] over several seeds, merged per parameter tensor.
pub fn end_to_end_checks(seeds: impl IntoIterator<Item = u64>) -> Result<Vec<GradCheck>> {
    let mut acc = Acc(Vec::new());
    for seed in seeds {
        for c in end_to_end(seed)? {
            acc.record(&c.name, c.max_error, c.tolerance, c.skipped);
        }
    }
    Ok(acc.0)
}
