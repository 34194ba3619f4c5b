//! Central finite differences, the reference every backward pass is
//! checked against.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Central-difference gradient of a scalar function at `x`.
///
/// The step actually taken is measured from the perturbed `f32` values, so
/// rounding of `x ± eps` does not bias the quotient.
pub fn finite_difference_grad<F>(f: F, x: &Tensor, eps: f32) -> Result<Tensor>
where
    F: Fn(&Tensor) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::arg(format!("eps must be positive, got {eps}")));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.numel());
    for i in 0..x.numel() {
        let orig = x.data()[i];
        let plus = orig + eps;
        let minus = orig - eps;
        probe.data_mut()[i] = plus;
        let fp = f(&probe)?;
        probe.data_mut()[i] = minus;
        let fm = f(&probe)?;
        probe.data_mut()[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric(format!("function is not finite near element {i}")));
        }
        let step = f64::from(plus) - f64::from(minus);
        grad.push(((fp - fm) / step) as f32);
    }
    Ok(Tensor::from_parts(x.dims(), grad))
}

/// Central differences together with a flag per coordinate marking where
/// `f` is visibly non-differentiable within `±eps` of `x`, as happens for
/// networks built from ReLU and max pooling.
///
/// Each coordinate is differenced with steps `eps` and `eps / 2`. On a
/// smooth function the two quotients agree to `O(eps²)`; when a kink lies
/// inside the wider interval they differ by a fraction of the slope jump.
/// A coordinate is flagged when they differ by more than 1% of their
/// magnitude plus `2e-4`. The returned gradient uses the wider step.
pub fn finite_difference_grad_checked<F>(f: F, x: &Tensor, eps: f32) -> Result<(Tensor, Vec<bool>)>
where
    F: Fn(&Tensor) -> Result<f64>,
{
    let wide = finite_difference_grad(&f, x, eps)?;
    let narrow = finite_difference_grad(&f, x, eps / 2.0)?;
    let flags = wide
        .data()
        .iter()
        .zip(narrow.data())
        .map(|(&a, &b)| {
            let (a, b) = (f64::from(a), f64::from(b));
            (a - b).abs() > 0.01 * a.abs().max(b.abs()) + 2e-4
        })
        .collect();
    Ok((wide, flags))
}

/// [`relative_error`] over the coordinates whose `skip` flag is false.
pub fn relative_error_masked(analytic: &[f32], numeric: &[f32], skip: &[bool]) -> f64 {
    let (a, n): (Vec<f32>, Vec<f32>) = analytic
        .iter()
        .zip(numeric)
        .zip(skip)
        .filter(|(_, &s)| !s)
        .map(|((&a, &n), _)| (a, n))
        .unzip();
    relative_error(&a, &n)
}

/// Normwise relative error `max|a - b| / max(max|a|, max|b|)`.
///
/// Returns 0 when both tensors are identically zero.
pub fn relative_error(analytic: &[f32], numeric: &[f32]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut diff = 0f64;
    let mut scale = 0f64;
    for (&a, &n) in analytic.iter().zip(numeric) {
        diff = diff.max((f64::from(a) - f64::from(n)).abs());
        scale = scale.max(f64::from(a).abs()).max(f64::from(n).abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
