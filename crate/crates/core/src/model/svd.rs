//! Truncated-SVD compression of the fully connected trunk layers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::layers::params::LayerParams;
use crate::model::net::{ActionNet, FcLayer};
use crate::tensor::Tensor;

/// Best rank-`r` factorization of a `(K, D)` weight matrix as two chained
/// maps `D → r → K`. Returns `(first, second, discarded_frobenius)`, with
/// the bias carried by the second map.
pub(crate) fn factorize(params: &LayerParams, rank: usize) -> Result<(LayerParams, LayerParams, f64)> {
    let dims = params.weights().dims();
    let (k, d) = (dims[0], dims[1]);
    if rank == 0 || rank > k.min(d) {
        return Err(Error::arg(format!("rank {rank} outside 1..={} for a {k}x{d} weight", k.min(d))));
    }
    let w = DMatrix::from_row_iterator(k, d, params.weights().data().iter().map(|&v| f64::from(v)));
    let svd = w.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut first = Vec::with_capacity(rank * d);
    let mut second = vec![0f32; k * rank];
    for (slot, &i) in order[..rank].iter().enumerate() {
        let s = svd.singular_values[i];
        first.extend((0..d).map(|c| (s * vt[(i, c)]) as f32));
        for row in 0..k {
            second[row * rank + slot] = u[(row, i)] as f32;
        }
    }
    let discarded: f64 = order[rank..].iter().map(|&i| svd.singular_values[i].powi(2)).sum::<f64>().sqrt();
    Ok((
        LayerParams::new(Tensor::from_parts(&[rank, d], first), Tensor::zeros(&[rank])?),
        LayerParams::new(Tensor::from_parts(&[k, rank], second), params.bias().clone()),
        discarded,
    ))
}

/// Replaces the FC1 and FC2 weights by rank-`rank` factorizations. Each
/// factorization minimizes the Frobenius error of its weight matrix.
pub fn svd_compress_fc(model: &ActionNet, rank: usize) -> Result<ActionNet> {
    let mut out = model.clone();
    for fc in [&mut out.fc1, &mut out.fc2] {
        let FcLayer::Full(p) = fc else {
            return Err(Error::arg("fully connected layers are already factorized"));
        };
        let (first, second, _) = factorize(p, rank)?;
        *fc = FcLayer::Factored { first, second };
    }
    out.config.fc_rank = Some(rank);
    Ok(out)
}
