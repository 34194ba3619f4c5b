use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn relu_forward(input: &Tensor) -> Tensor {
    input.map(|v| v.max(0.0))
}

/// Passes the gradient where the input is strictly positive.
pub fn relu_backward(input: &Tensor, grad_output: &Tensor) -> Result<Tensor> {
    input.map_binary(grad_output, |x, g| if x > 0.0 { g } else { 0.0 })
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax of an `(N, M)` tensor, computed in `f64` after
/// subtracting each row's maximum.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    let d = logits.dims();
    if d.len() != 2 {
        return Err(Error::shape(format!("softmax expects (N, M), got {}", logits.shape())));
    }
    let mut out = Vec::with_capacity(logits.numel());
    for row in logits.data().chunks_exact(d[1]) {
        out.extend(softmax_row(row).into_iter().map(|p| p as f32));
    }
    Ok(Tensor::from_parts(d, out))
}

pub(crate) fn softmax_row(row: &[f32]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
    let exps: Vec<f64> = row.iter().map(|&v| (f64::from(v) - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{finite_difference_grad, relative_error};
    use proptest::prelude::*;

    #[test]
    fn saturation_and_identity_regions() {
        let neg = Tensor::random_uniform(&[10], -2.0, -0.1, 1).unwrap();
        assert_eq!(relu_forward(&neg).max_abs(), 0.0);
        let pos = Tensor::random_uniform(&[10], 0.1, 2.0, 2).unwrap();
        assert_eq!(relu_forward(&pos), pos);
        let g = Tensor::random_uniform(&[10], -1.0, 1.0, 3).unwrap();
        assert_eq!(relu_backward(&pos, &g).unwrap(), g);
        let zero = Tensor::zeros(&[3]).unwrap();
        assert_eq!(relu_backward(&zero, &Tensor::ones(&[3]).unwrap()).unwrap(), zero);
    }

    #[test]
    fn relu_backward_matches_finite_differences() {
        for seed in 0..20u64 {
            // keep values clear of the kink at zero
            let x = Tensor::random_uniform(&[24], -1.0, 1.0, 10 + seed)
                .unwrap()
                .map(|v| if v.abs() < 0.01 { v + 0.02_f32.copysign(v) } else { v });
            let r = Tensor::random_uniform(&[24], -1.0, 1.0, 40 + seed).unwrap();
            let gx = relu_backward(&x, &r).unwrap();
            let fd = finite_difference_grad(
                |xx| Ok(relu_forward(xx).data().iter().zip(r.data()).map(|(&a, &b)| f64::from(a * b)).sum()),
                &x,
                1e-3,
            )
            .unwrap();
            assert!(relative_error(gx.data(), fd.data()) < 1e-3);
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(-800.0) >= 0.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn softmax_rows_are_simplex(seed in any::<u64>(), scale in 0.1f32..50.0) {
            let x = Tensor::random_uniform(&[4, 7], -scale, scale, seed).unwrap();
            let p = softmax(&x).unwrap();
            for row in p.data().chunks(7) {
                prop_assert!(row.iter().all(|&v| v >= 0.0));
                let s: f32 = row.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-5);
            }
        }
    }
}
