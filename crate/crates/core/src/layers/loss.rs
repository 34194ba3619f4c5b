//! The three per-head losses: softmax cross-entropy for the category,
//! multi-label binary cross-entropy for each attribute level and the squared
//! Euclidean distance for the location offset.

use crate::error::{Error, Result};
use crate::layers::activation::softmax_row;
use crate::tensor::Tensor;

/// Probability clamp applied inside the attribute log terms.
pub const PROB_EPS: f64 = 1e-7;

/// Mean over the batch of `-log softmax(logits)[label]`, with the gradient
/// `(softmax - onehot) / N` w.r.t. the logits.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let d = logits.dims();
    if d.len() != 2 || d[0] != labels.len() {
        return Err(Error::shape(format!(
            "logits {} vs {} labels",
            logits.shape(),
            labels.len()
        )));
    }
    let (n, m) = (d[0], d[1]);
    if let Some(&bad) = labels.iter().find(|&&l| l >= m) {
        return Err(Error::arg(format!("label {bad} out of range for {m} classes")));
    }
    let mut loss = 0f64;
    let mut grad = Vec::with_capacity(n * m);
    for (row, &label) in logits.data().chunks_exact(m).zip(labels) {
        let max = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
        let lse = max + row.iter().map(|&v| (f64::from(v) - max).exp()).sum::<f64>().ln();
        loss += lse - f64::from(row[label]);
        let p = softmax_row(row);
        grad.extend(p.iter().enumerate().map(|(j, &pj)| {
            let onehot = if j == label { 1.0 } else { 0.0 };
            ((pj - onehot) / n as f64) as f32
        }));
    }
    Ok((loss / n as f64, Tensor::from_parts(d, grad)))
}

/// `-(1/N) Σ [t ln p + (1-t) ln(1-p)]` over the `N` attribute outputs of one
/// sample, with `p` clamped to `[ε, 1-ε]`. The gradient is w.r.t. `p` and is
/// zero where the clamp is active.
pub fn multilabel_cross_entropy(probs: &Tensor, targets: &[bool]) -> Result<(f64, Tensor)> {
    if probs.numel() != targets.len() || targets.is_empty() {
        return Err(Error::shape(format!(
            "{} probabilities vs {} targets",
            probs.numel(),
            targets.len()
        )));
    }
    let n = targets.len() as f64;
    let mut loss = 0f64;
    let mut grad = Vec::with_capacity(targets.len());
    for (&p, &t) in probs.data().iter().zip(targets) {
        let raw = f64::from(p);
        let pc = raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
        let inside = raw == pc;
        if t {
            loss -= pc.ln();
            grad.push(if inside { (-1.0 / (pc * n)) as f32 } else { 0.0 });
        } else {
            loss -= (1.0 - pc).ln();
            grad.push(if inside { (1.0 / ((1.0 - pc) * n)) as f32 } else { 0.0 });
        }
    }
    Ok((loss / n, Tensor::from_parts(probs.dims(), grad)))
}

/// `||loc - target||²` with gradient `2 (loc - target)` w.r.t. `loc`.
pub fn bbox_euclidean_loss(loc: &[f32], target: &[f32]) -> Result<(f64, [f32; 2])> {
    if loc.len() != 2 || target.len() != 2 {
        return Err(Error::shape(format!(
            "location vectors must have length 2, got {} and {}",
            loc.len(),
            target.len()
        )));
    }
    let dx = f64::from(loc[0]) - f64::from(target[0]);
    let dy = f64::from(loc[1]) - f64::from(target[1]);
    Ok((dx * dx + dy * dy, [(2.0 * dx) as f32, (2.0 * dy) as f32]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{finite_difference_grad, relative_error};
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_give_log_m() {
        let logits = Tensor::zeros(&[2, 101]).unwrap();
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 57]).unwrap();
        assert!((loss - 101f64.ln()).abs() < 1e-9);
        assert!((loss - 4.6151).abs() < 1e-4);
    }

    #[test]
    fn dominant_logit_drives_loss_to_zero() {
        let mut logits = Tensor::zeros(&[1, 5]).unwrap();
        logits.set(&[0, 3], 60.0).unwrap();
        let (loss, _) = softmax_cross_entropy(&logits, &[3]).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn label_out_of_range() {
        let logits = Tensor::zeros(&[1, 3]).unwrap();
        assert!(matches!(softmax_cross_entropy(&logits, &[3]), Err(Error::Argument(_))));
    }

    #[test]
    fn softmax_gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let logits = Tensor::random_uniform(&[3, 6], -1.0, 1.0, seed).unwrap();
            let labels = [seed as usize % 6, 2, 5];
            let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
            let fd = finite_difference_grad(|l| Ok(softmax_cross_entropy(l, &labels)?.0), &logits, 1e-3).unwrap();
            assert!(relative_error(g.data(), fd.data()) < 1e-3);
        }
    }

    #[test]
    fn half_probabilities_give_ln2() {
        let p = Tensor::full(&[19], 0.5).unwrap();
        let targets: Vec<bool> = (0..19).map(|i| i % 3 == 0).collect();
        let (loss, _) = multilabel_cross_entropy(&p, &targets).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let targets: Vec<bool> = (0..14).map(|i| i % 2 == 0).collect();
        let p = Tensor::from_vec(&[14], targets.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect()).unwrap();
        let (loss, _) = multilabel_cross_entropy(&p, &targets).unwrap();
        assert!(loss <= 2.0 * PROB_EPS * PROB_EPS.ln().abs());
    }

    #[test]
    fn three_attribute_example() {
        let p = Tensor::from_vec(&[3], vec![0.9, 0.2, 0.8]).unwrap();
        let (loss, _) = multilabel_cross_entropy(&p, &[true, false, true]).unwrap();
        // -(1/3)(ln 0.9 + ln 0.8 + ln 0.8), evaluated independently
        assert!((loss - 0.183_882_5).abs() < 1e-6, "{loss}");
    }

    #[test]
    fn multilabel_length_mismatch() {
        let p = Tensor::full(&[3], 0.5).unwrap();
        assert!(matches!(multilabel_cross_entropy(&p, &[true]), Err(Error::Shape(_))));
    }

    #[test]
    fn multilabel_gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let p = Tensor::random_uniform(&[7], 0.05, 0.95, seed).unwrap();
            let t: Vec<bool> = (0..7).map(|i| (i + seed as usize) % 2 == 0).collect();
            let (_, g) = multilabel_cross_entropy(&p, &t).unwrap();
            let fd = finite_difference_grad(|q| Ok(multilabel_cross_entropy(q, &t)?.0), &p, 1e-4).unwrap();
            assert!(relative_error(g.data(), fd.data()) < 1e-3);
        }
    }

    #[test]
    fn bbox_cases() {
        assert_eq!(bbox_euclidean_loss(&[1.5, -2.0], &[1.5, -2.0]).unwrap().0, 0.0);
        let (l, g) = bbox_euclidean_loss(&[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert_eq!(l, 25.0);
        assert_eq!(g, [6.0, 8.0]);
        assert!(matches!(bbox_euclidean_loss(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn bbox_is_symmetric(a in proptest::array::uniform2(-100f32..100.0), b in proptest::array::uniform2(-100f32..100.0)) {
            prop_assert_eq!(bbox_euclidean_loss(&a, &b).unwrap().0, bbox_euclidean_loss(&b, &a).unwrap().0);
        }

        #[test]
        fn multilabel_minimized_at_clamped_targets(
            bits in proptest::collection::vec(any::<bool>(), 1..20),
            idx in any::<usize>(),
            delta in 1e-3f64..0.5,
        ) {
            let best: Vec<f32> = bits.iter().map(|&t| if t { (1.0 - PROB_EPS) as f32 } else { PROB_EPS as f32 }).collect();
            let base = multilabel_cross_entropy(&Tensor::from_vec(&[bits.len()], best.clone()).unwrap(), &bits).unwrap().0;
            let mut worse = best;
            let i = idx % bits.len();
            worse[i] = if bits[i] { (1.0 - PROB_EPS - delta) as f32 } else { (PROB_EPS + delta) as f32 };
            let perturbed = multilabel_cross_entropy(&Tensor::from_vec(&[bits.len()], worse).unwrap(), &bits).unwrap().0;
            prop_assert!(perturbed > base);
        }
    }
}
