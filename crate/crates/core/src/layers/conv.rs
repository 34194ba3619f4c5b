//! 3D cross-correlation over `(time, height, width)` with zero padding.
//!
//! Both passes lower the convolution to matrix products through an
//! unfolded ("im2col") view of the input, accumulated in `f64`.

use crate::error::{Error, Result};
use crate::layers::gemm::{gemm, to_f64};
use crate::layers::params::LayerParams;
use crate::tensor::Tensor;

/// Geometry of one convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv3DSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `(kt, kh, kw)`
    pub kernel: [usize; 3],
    pub stride: [usize; 3],
    pub padding: [usize; 3],
}

impl Conv3DSpec {
    /// Cubic kernel, unit stride, "same" padding.
    pub fn same(in_channels: usize, out_channels: usize, k: usize) -> Self {
        Conv3DSpec {
            in_channels,
            out_channels,
            kernel: [k; 3],
            stride: [1; 3],
            padding: [k / 2; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::geometry("channel counts must be positive"));
        }
        if self.kernel.contains(&0) || self.stride.contains(&0) {
            return Err(Error::geometry("kernel extents and strides must be >= 1"));
        }
        Ok(())
    }

    pub fn weight_dims(&self) -> [usize; 5] {
        [
            self.out_channels,
            self.in_channels,
            self.kernel[0],
            self.kernel[1],
            self.kernel[2],
        ]
    }

    /// Rows of the unfolded input: `in_channels * kt * kh * kw`.
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel.iter().product::<usize>()
    }

    /// `floor((ext + 2 pad - kernel) / stride) + 1` per axis.
    pub fn output_extents(&self, input: [usize; 3]) -> Result<[usize; 3]> {
        self.validate()?;
        let mut out = [0; 3];
        for a in 0..3 {
            let padded = input[a] + 2 * self.padding[a];
            if padded < self.kernel[a] {
                return Err(Error::geometry(format!(
                    "axis {a}: kernel {} exceeds padded extent {padded}",
                    self.kernel[a]
                )));
            }
            out[a] = (padded - self.kernel[a]) / self.stride[a] + 1;
        }
        Ok(out)
    }
}

fn check_input(input: &Tensor, spec: &Conv3DSpec) -> Result<[usize; 5]> {
    let d = input.dims();
    if d.len() != 5 {
        return Err(Error::shape(format!("conv3d expects (N,C,T,H,W), got {}", input.shape())));
    }
    if d[1] != spec.in_channels {
        return Err(Error::shape(format!(
            "conv3d expects {} input channels, got {}",
            spec.in_channels, d[1]
        )));
    }
    Ok([d[0], d[1], d[2], d[3], d[4]])
}

fn check_params(spec: &Conv3DSpec, params: &LayerParams) -> Result<()> {
    if params.weights().dims() != spec.weight_dims() || params.bias().dims() != [spec.out_channels] {
        return Err(Error::shape(format!(
            "conv weights {} do not match spec {:?}",
            params.weights().shape(),
            spec.weight_dims()
        )));
    }
    Ok(())
}

/// Unfolds one sample `(C, T, H, W)` into a `patch_len × positions` matrix.
fn im2col(x: &[f32], in_ext: [usize; 3], spec: &Conv3DSpec, out_ext: [usize; 3], col: &mut [f64]) {
    let [t_in, h_in, w_in] = in_ext;
    let [t_out, h_out, w_out] = out_ext;
    let [kt, kh, kw] = spec.kernel;
    let [st, sh, sw] = spec.stride;
    let [pt, ph, pw] = spec.padding;
    let positions = t_out * h_out * w_out;
    let mut row = 0;
    for c in 0..spec.in_channels {
        let xc = &x[c * t_in * h_in * w_in..(c + 1) * t_in * h_in * w_in];
        for dt in 0..kt {
            for dh in 0..kh {
                for dw in 0..kw {
                    let dst = &mut col[row * positions..(row + 1) * positions];
                    let mut p = 0;
                    for ot in 0..t_out {
                        let it = (ot * st + dt) as isize - pt as isize;
                        for oh in 0..h_out {
                            let ih = (oh * sh + dh) as isize - ph as isize;
                            let row_ok = it >= 0 && (it as usize) < t_in && ih >= 0 && (ih as usize) < h_in;
                            for ow in 0..w_out {
                                let iw = (ow * sw + dw) as isize - pw as isize;
                                dst[p] = if row_ok && iw >= 0 && (iw as usize) < w_in {
                                    f64::from(xc[((it as usize) * h_in + ih as usize) * w_in + iw as usize])
                                } else {
                                    0.0
                                };
                                p += 1;
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

/// Scatter-adds an unfolded gradient back onto the sample layout.
fn col2im(col: &[f64], in_ext: [usize; 3], spec: &Conv3DSpec, out_ext: [usize; 3], dx: &mut [f64]) {
    let [t_in, h_in, w_in] = in_ext;
    let [t_out, h_out, w_out] = out_ext;
    let [kt, kh, kw] = spec.kernel;
    let [st, sh, sw] = spec.stride;
    let [pt, ph, pw] = spec.padding;
    let positions = t_out * h_out * w_out;
    let mut row = 0;
    for c in 0..spec.in_channels {
        let base = c * t_in * h_in * w_in;
        for dt in 0..kt {
            for dh in 0..kh {
                for dw in 0..kw {
                    let src = &col[row * positions..(row + 1) * positions];
                    let mut p = 0;
                    for ot in 0..t_out {
                        let it = (ot * st + dt) as isize - pt as isize;
                        for oh in 0..h_out {
                            let ih = (oh * sh + dh) as isize - ph as isize;
                            let row_ok = it >= 0 && (it as usize) < t_in && ih >= 0 && (ih as usize) < h_in;
                            for ow in 0..w_out {
                                let iw = (ow * sw + dw) as isize - pw as isize;
                                if row_ok && iw >= 0 && (iw as usize) < w_in {
                                    dx[base + ((it as usize) * h_in + ih as usize) * w_in + iw as usize] += src[p];
                                }
                                p += 1;
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

pub fn conv3d_forward(input: &Tensor, spec: &Conv3DSpec, params: &LayerParams) -> Result<Tensor> {
    let [n, c, t, h, w] = check_input(input, spec)?;
    check_params(spec, params)?;
    let out_ext = spec.output_extents([t, h, w])?;
    let positions: usize = out_ext.iter().product();
    let k = spec.patch_len();
    let cout = spec.out_channels;
    let weights = to_f64(params.weights().data());
    let bias = params.bias().data();
    let sample_in = c * t * h * w;
    let mut col = vec![0f64; k * positions];
    let mut acc = vec![0f64; cout * positions];
    let mut out = Vec::with_capacity(n * cout * positions);
    for s in 0..n {
        im2col(&input.data()[s * sample_in..(s + 1) * sample_in], [t, h, w], spec, out_ext, &mut col);
        gemm(cout, k, positions, &weights, false, &col, false, &mut acc, false);
        for (o, row) in acc.chunks_exact(positions).enumerate() {
            let b = f64::from(bias[o]);
            out.extend(row.iter().map(|&v| (v + b) as f32));
        }
    }
    Ok(Tensor::from_parts(&[n, cout, out_ext[0], out_ext[1], out_ext[2]], out))
}

fn backward_impl(
    input: &Tensor,
    spec: &Conv3DSpec,
    params: &mut LayerParams,
    grad_output: &Tensor,
    want_input_grad: bool,
) -> Result<Option<Tensor>> {
    let [n, c, t, h, w] = check_input(input, spec)?;
    check_params(spec, params)?;
    let out_ext = spec.output_extents([t, h, w])?;
    let cout = spec.out_channels;
    if grad_output.dims() != [n, cout, out_ext[0], out_ext[1], out_ext[2]] {
        return Err(Error::shape(format!(
            "conv3d grad_output {} does not match forward output",
            grad_output.shape()
        )));
    }
    let positions: usize = out_ext.iter().product();
    let k = spec.patch_len();
    let sample_in = c * t * h * w;
    let weights = to_f64(params.weights().data());
    let mut col = vec![0f64; k * positions];
    let mut dcol = if want_input_grad { vec![0f64; k * positions] } else { Vec::new() };
    let mut dw = vec![0f64; cout * k];
    let mut db = vec![0f64; cout];
    let mut dx = if want_input_grad { vec![0f64; n * sample_in] } else { Vec::new() };
    for s in 0..n {
        let dy = to_f64(&grad_output.data()[s * cout * positions..(s + 1) * cout * positions]);
        for (o, row) in dy.chunks_exact(positions).enumerate() {
            db[o] += row.iter().sum::<f64>();
        }
        im2col(&input.data()[s * sample_in..(s + 1) * sample_in], [t, h, w], spec, out_ext, &mut col);
        // dW += dY · colᵀ
        gemm(cout, positions, k, &dy, false, &col, true, &mut dw, true);
        if want_input_grad {
            // dcol = Wᵀ · dY
            gemm(k, cout, positions, &weights, true, &dy, false, &mut dcol, false);
            col2im(&dcol, [t, h, w], spec, out_ext, &mut dx[s * sample_in..(s + 1) * sample_in]);
        }
    }
    let (gw, gb) = params.grads_mut();
    for (g, v) in gw.iter_mut().zip(&dw) {
        *g += *v as f32;
    }
    for (g, v) in gb.iter_mut().zip(&db) {
        *g += *v as f32;
    }
    Ok(want_input_grad.then(|| Tensor::from_parts(input.dims(), dx.into_iter().map(|v| v as f32).collect())))
}

/// Accumulates weight/bias gradients into `params` and returns the input
/// gradient.
pub fn conv3d_backward(
    input: &Tensor,
    spec: &Conv3DSpec,
    params: &mut LayerParams,
    grad_output: &Tensor,
) -> Result<Tensor> {
    Ok(backward_impl(input, spec, params, grad_output, true)?.expect("input gradient requested"))
}

/// Parameter gradients only; used for the first layer where the input
/// gradient is never consumed.
pub fn conv3d_backward_params(
    input: &Tensor,
    spec: &Conv3DSpec,
    params: &mut LayerParams,
    grad_output: &Tensor,
) -> Result<()> {
    backward_impl(input, spec, params, grad_output, false).map(|_| ())
}
