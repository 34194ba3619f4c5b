//! SGD with momentum and the step learning-rate schedule.

use crate::error::{Error, Result};
use crate::layers::params::LayerParams;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub lr_decay_factor: f64,
    pub lr_step_iterations: usize,
    pub max_iterations: usize,
}

impl OptimizerConfig {
    /// From-scratch schedule: lr 0.005 decayed ×0.3 every 50K iterations,
    /// stopping at 500K; momentum 0.9, batch 40.
    pub fn pretrain() -> Self {
        OptimizerConfig {
            learning_rate: 0.005,
            momentum: 0.9,
            batch_size: 40,
            lr_decay_factor: 0.3,
            lr_step_iterations: 50_000,
            max_iterations: 500_000,
        }
    }

    /// Fine-tuning schedule: lr 0.001 decayed ×0.1 every 1000 iterations,
    /// 3.7K iterations in total.
    pub fn finetune() -> Self {
        OptimizerConfig {
            learning_rate: 0.001,
            momentum: 0.9,
            batch_size: 40,
            lr_decay_factor: 0.1,
            lr_step_iterations: 1000,
            max_iterations: 3700,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // a zero rate is allowed: it freezes the weights
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning_rate must be >= 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return Err(Error::Config(format!("lr_decay_factor must be in (0, 1], got {}", self.lr_decay_factor)));
        }
        if self.lr_step_iterations == 0 {
            return Err(Error::Config("lr_step_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// `base_lr · decay^floor(iteration / step)`.
pub fn lr_schedule(config: &OptimizerConfig, iteration: usize) -> f64 {
    let steps = (iteration / config.lr_step_iterations.max(1)) as i32;
    config.learning_rate * config.lr_decay_factor.powi(steps)
}

/// `v ← μ v − lr g; w ← w + v`, then clears the gradients.
pub fn sgd_momentum_step(params: &mut LayerParams, config: &OptimizerConfig, current_lr: f64) {
    let mu = config.momentum as f32;
    let lr = current_lr as f32;
    let (w, b, gw, gb, vw, vb) = params.split_mut();
    for ((w, g), v) in w.iter_mut().zip(gw.iter()).zip(vw.iter_mut()) {
        *v = mu * *v - lr * g;
        *w += *v;
    }
    for ((w, g), v) in b.iter_mut().zip(gb.iter()).zip(vb.iter_mut()) {
        *v = mu * *v - lr * g;
        *w += *v;
    }
    params.zero_grad();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn single(w: f32) -> LayerParams {
        LayerParams::new(Tensor::from_vec(&[1, 1], vec![w]).unwrap(), Tensor::zeros(&[1]).unwrap())
    }

    fn set_grad(p: &mut LayerParams, g: f32) {
        p.grads_mut().0[0] = g;
    }

    #[test]
    fn zero_momentum_is_plain_sgd() {
        let cfg = OptimizerConfig {
            momentum: 0.0,
            ..OptimizerConfig::pretrain()
        };
        let mut p = single(1.0);
        set_grad(&mut p, 0.5);
        sgd_momentum_step(&mut p, &cfg, 0.1);
        assert!((p.weights().data()[0] - 0.95).abs() < 1e-7);
        assert_eq!(p.grad_weights().data()[0], 0.0);
    }

    #[test]
    fn two_momentum_steps_unrolled() {
        let cfg = OptimizerConfig {
            momentum: 0.9,
            ..OptimizerConfig::pretrain()
        };
        let mut p = single(0.0);
        for _ in 0..2 {
            set_grad(&mut p, 1.0);
            sgd_momentum_step(&mut p, &cfg, 0.1);
        }
        // v1 = -0.1, v2 = 0.9 * -0.1 - 0.1 = -0.19; Δw = -0.29
        assert!((p.weights().data()[0] + 0.29).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_moves_only_by_momentum() {
        let cfg = OptimizerConfig::pretrain();
        let mut p = single(1.0);
        sgd_momentum_step(&mut p, &cfg, 0.1);
        assert_eq!(p.weights().data()[0], 1.0);
        p.set_momentum(Tensor::from_vec(&[1, 1], vec![0.5]).unwrap(), Tensor::zeros(&[1]).unwrap())
            .unwrap();
        sgd_momentum_step(&mut p, &cfg, 0.1);
        assert!((p.weights().data()[0] - 1.45).abs() < 1e-6);
    }

    #[test]
    fn published_defaults() {
        let pre = OptimizerConfig::pretrain();
        assert_eq!((pre.momentum, pre.batch_size), (0.9, 40));
        assert_eq!((pre.learning_rate, pre.lr_decay_factor), (0.005, 0.3));
        assert_eq!((pre.lr_step_iterations, pre.max_iterations), (50_000, 500_000));
        let ft = OptimizerConfig::finetune();
        assert_eq!((ft.learning_rate, ft.lr_decay_factor, ft.lr_step_iterations), (0.001, 0.1, 1000));
    }

    #[test]
    fn schedule_steps() {
        let pre = OptimizerConfig::pretrain();
        assert_eq!(lr_schedule(&pre, 0), 0.005);
        assert_eq!(lr_schedule(&pre, 49_999), 0.005);
        assert!((lr_schedule(&pre, 50_000) - 0.0015).abs() < 1e-15);
        let ft = OptimizerConfig::finetune();
        assert!((lr_schedule(&ft, 2500) - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn validation() {
        let bad = OptimizerConfig {
            momentum: 1.0,
            ..OptimizerConfig::pretrain()
        };
        assert!(bad.validate().is_err());
        assert!(OptimizerConfig::finetune().validate().is_ok());
    }
}
