use crate::error::{Error, Result};
use crate::layers::gemm::{gemm, to_f64};
use crate::layers::params::LayerParams;
use crate::tensor::Tensor;

fn check(input: &Tensor, params: &LayerParams) -> Result<(usize, usize, usize)> {
    let d = input.dims();
    let w = params.weights().dims();
    if d.len() != 2 || w.len() != 2 || d[1] != w[1] || params.bias().dims() != [w[0]] {
        return Err(Error::shape(format!(
            "fully connected: input {} vs weights {}",
            input.shape(),
            params.weights().shape()
        )));
    }
    Ok((d[0], d[1], w[0]))
}

/// `x · Wᵀ + b` for `x: (N, D)`, `W: (K, D)`.
pub fn fc_forward(input: &Tensor, params: &LayerParams) -> Result<Tensor> {
    let (n, d, k) = check(input, params)?;
    let mut out = vec![0f64; n * k];
    gemm(n, d, k, &to_f64(input.data()), false, &to_f64(params.weights().data()), true, &mut out, false);
    let b = params.bias().data();
    let out = out
        .chunks_exact(k)
        .flat_map(|row| row.iter().zip(b).map(|(&v, &bb)| (v + f64::from(bb)) as f32))
        .collect();
    Ok(Tensor::from_parts(&[n, k], out))
}

/// Accumulates `dW += dYᵀ x`, `db += Σ dY` and returns `dY · W`.
pub fn fc_backward(input: &Tensor, params: &mut LayerParams, grad_output: &Tensor) -> Result<Tensor> {
    let (n, d, k) = check(input, params)?;
    if grad_output.dims() != [n, k] {
        return Err(Error::shape(format!("fc grad_output {} expected ({n}, {k})", grad_output.shape())));
    }
    let dy = to_f64(grad_output.data());
    let x = to_f64(input.data());
    let mut dx = vec![0f64; n * d];
    gemm(n, k, d, &dy, false, &to_f64(params.weights().data()), false, &mut dx, false);
    let mut dw = vec![0f64; k * d];
    gemm(k, n, d, &dy, true, &x, false, &mut dw, false);
    let (gw, gb) = params.grads_mut();
    for (g, v) in gw.iter_mut().zip(&dw) {
        *g += *v as f32;
    }
    for row in dy.chunks_exact(k) {
        for (g, v) in gb.iter_mut().zip(row) {
            *g += *v as f32;
        }
    }
    Ok(Tensor::from_parts(&[n, d], dx.into_iter().map(|v| v as f32).collect()))
}
