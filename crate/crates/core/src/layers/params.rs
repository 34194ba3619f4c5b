use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Learnable weights and bias of one layer together with their gradient
/// accumulators and momentum buffers. The three sets always share shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    weights: Tensor,
    bias: Tensor,
    grad_weights: Tensor,
    grad_bias: Tensor,
    momentum_weights: Tensor,
    momentum_bias: Tensor,
}

impl LayerParams {
    pub fn new(weights: Tensor, bias: Tensor) -> Self {
        let zw = Tensor::from_parts(weights.dims(), vec![0.0; weights.numel()]);
        let zb = Tensor::from_parts(bias.dims(), vec![0.0; bias.numel()]);
        LayerParams {
            grad_weights: zw.clone(),
            grad_bias: zb.clone(),
            momentum_weights: zw,
            momentum_bias: zb,
            weights,
            bias,
        }
    }

    /// Zero-mean uniform weights with half-width `sqrt(6 / (fan_in + fan_out))`
    /// and zero bias.
    pub fn init_uniform(weight_dims: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Result<Self> {
        let half = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
        let mut weights = Tensor::zeros(weight_dims)?;
        for w in weights.data_mut() {
            *w = rng.gen_range(-half..half);
        }
        let bias = Tensor::zeros(&[weight_dims[0]])?;
        Ok(Self::new(weights, bias))
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    pub fn grad_weights(&self) -> &Tensor {
        &self.grad_weights
    }

    pub fn grad_bias(&self) -> &Tensor {
        &self.grad_bias
    }

    pub fn momentum_weights(&self) -> &Tensor {
        &self.momentum_weights
    }

    pub fn momentum_bias(&self) -> &Tensor {
        &self.momentum_bias
    }

    pub fn weights_mut(&mut self) -> &mut [f32] {
        self.weights.data_mut()
    }

    pub fn bias_mut(&mut self) -> &mut [f32] {
        self.bias.data_mut()
    }

    pub(crate) fn grads_mut(&mut self) -> (&mut [f32], &mut [f32]) {
        (self.grad_weights.data_mut(), self.grad_bias.data_mut())
    }

    /// Replaces the momentum buffers, e.g. when restoring optimizer state.
    pub fn set_momentum(&mut self, weights: Tensor, bias: Tensor) -> Result<()> {
        if weights.shape() != self.weights.shape() || bias.shape() != self.bias.shape() {
            return Err(Error::shape("momentum buffers must match parameter shapes"));
        }
        self.momentum_weights = weights;
        self.momentum_bias = bias;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights.fill(0.0);
        self.grad_bias.fill(0.0);
    }

    pub fn num_params(&self) -> usize {
        self.weights.numel() + self.bias.numel()
    }

    /// Adds another parameter set's gradients into this one.
    pub fn accumulate_grads(&mut self, other: &LayerParams) -> Result<()> {
        if other.weights.shape() != self.weights.shape() || other.bias.shape() != self.bias.shape() {
            return Err(Error::shape("gradient accumulation across mismatched layers"));
        }
        for (g, o) in self.grad_weights.data_mut().iter_mut().zip(other.grad_weights.data()) {
            *g += o;
        }
        for (g, o) in self.grad_bias.data_mut().iter_mut().zip(other.grad_bias.data()) {
            *g += o;
        }
        Ok(())
    }

    pub(crate) fn momentum_mut(&mut self) -> (&mut [f32], &mut [f32]) {
        (self.momentum_weights.data_mut(), self.momentum_bias.data_mut())
    }

    /// Simultaneous mutable access for the optimizer:
    /// `(weights, bias, grad_w, grad_b, mom_w, mom_b)`.
    #[allow(clippy::type_complexity)]
    pub(crate) fn split_mut(
        &mut self,
    ) -> (&mut [f32], &mut [f32], &mut [f32], &mut [f32], &mut [f32], &mut [f32]) {
        (
            self.weights.data_mut(),
            self.bias.data_mut(),
            self.grad_weights.data_mut(),
            self.grad_bias.data_mut(),
            self.momentum_weights.data_mut(),
            self.momentum_bias.data_mut(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn buffers_share_parameter_shapes() {
        let mut r = rng::stream(1, 0);
        let p = LayerParams::init_uniform(&[4, 3, 3, 3, 3], 81, 108, &mut r).unwrap();
        assert_eq!(p.grad_weights().shape(), p.weights().shape());
        assert_eq!(p.momentum_weights().shape(), p.weights().shape());
        assert_eq!(p.bias().dims(), &[4]);
        assert_eq!(p.grad_bias().shape(), p.bias().shape());
        let half = (6.0f32 / 189.0).sqrt();
        assert!(p.weights().data().iter().all(|w| w.abs() <= half));
        assert!(p.bias().data().iter().all(|&b| b == 0.0));
    }
}
