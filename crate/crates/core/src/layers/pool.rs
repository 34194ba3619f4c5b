use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Unpadded 3D max pooling. Returns the pooled tensor and, per output
/// element, the flat input index that won (lowest index on ties).
pub fn maxpool3d_forward(input: &Tensor, kernel: [usize; 3], stride: [usize; 3]) -> Result<(Tensor, Vec<usize>)> {
    let d = input.dims();
    if d.len() != 5 {
        return Err(Error::shape(format!("maxpool3d expects (N,C,T,H,W), got {}", input.shape())));
    }
    if kernel.contains(&0) || stride.contains(&0) {
        return Err(Error::geometry("pool kernel and stride must be >= 1"));
    }
    let ext = [d[2], d[3], d[4]];
    let out_ext = pool_extents(ext, kernel, stride)?;
    let planes = d[0] * d[1];
    let plane_in = ext.iter().product::<usize>();
    let plane_out = out_ext.iter().product::<usize>();
    let x = input.data();
    let mut out = Vec::with_capacity(planes * plane_out);
    let mut argmax = Vec::with_capacity(planes * plane_out);
    for p in 0..planes {
        let base = p * plane_in;
        for ot in 0..out_ext[0] {
            for oh in 0..out_ext[1] {
                for ow in 0..out_ext[2] {
                    let mut best = f32::NEG_INFINITY;
                    let mut best_idx = usize::MAX;
                    for a in 0..kernel[0] {
                        let it = ot * stride[0] + a;
                        for b in 0..kernel[1] {
                            let ih = oh * stride[1] + b;
                            for c in 0..kernel[2] {
                                let iw = ow * stride[2] + c;
                                let idx = base + (it * ext[1] + ih) * ext[2] + iw;
                                // windows are scanned in increasing flat order, so a strict
                                // comparison keeps the lowest index among ties
                                if x[idx] > best || best_idx == usize::MAX {
                                    best = x[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    Ok((
        Tensor::from_parts(&[d[0], d[1], out_ext[0], out_ext[1], out_ext[2]], out),
        argmax,
    ))
}

pub fn pool_extents(ext: [usize; 3], kernel: [usize; 3], stride: [usize; 3]) -> Result<[usize; 3]> {
    let mut out = [0; 3];
    for a in 0..3 {
        if kernel[a] > ext[a] {
            return Err(Error::geometry(format!(
                "axis {a}: pool kernel {} larger than input extent {}",
                kernel[a], ext[a]
            )));
        }
        out[a] = (ext[a] - kernel[a]) / stride[a] + 1;
    }
    Ok(out)
}

/// Routes each output gradient to its recorded argmax.
pub fn maxpool3d_backward(input_dims: &[usize], argmax: &[usize], grad_output: &Tensor) -> Result<Tensor> {
    if argmax.len() != grad_output.numel() {
        return Err(Error::shape("argmax count does not match grad_output"));
    }
    let mut dx = Tensor::zeros(input_dims)?;
    let g = dx.data_mut();
    for (&idx, &v) in argmax.iter().zip(grad_output.data()) {
        g[idx] += v;
    }
    Ok(dx)
}
