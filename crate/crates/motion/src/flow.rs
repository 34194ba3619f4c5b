//! Dense optical flow by the Horn–Schunck method.
//!
//! The energy minimized is
//!
//! ```text
//! E(u, v) = Σ_p (Ix u + Iy v + It)²  +  α² Σ_{p~q} (u_p − u_q)² + (v_p − v_q)²
//! ```
//!
//! over 4-connected pixel pairs. For a fixed neighbourhood the energy is a
//! strictly convex quadratic in one pixel's `(u, v)`, minimized in closed
//! form by the classic update
//!
//! ```text
//! u = ū − Ix (Ix ū + Iy v̄ + It) / (α² n + Ix² + Iy²)
//! ```
//!
//! where `ū, v̄` are neighbour means and `n` the neighbour count. Pixels of
//! one checkerboard colour share no pair term, so each half-sweep updates
//! them all at once and is an exact block minimization: the energy never
//! increases.

use actparse_core::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Smoothness weight, for intensities in `[0, 1]`. The default is the
    /// customary 15 on an 8-bit intensity scale, i.e. 15/255.
    pub alpha: f64,
    /// Number of full (two-colour) sweeps.
    pub iterations: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            alpha: 15.0 / 255.0,
            iterations: 200,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::arg(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.iterations == 0 {
            return Err(Error::arg("flow needs at least one iteration"));
        }
        Ok(())
    }
}

struct Derivatives {
    h: usize,
    w: usize,
    ix: Vec<f64>,
    iy: Vec<f64>,
    it: Vec<f64>,
}

fn frame_dims(a: &Tensor, b: &Tensor) -> Result<(usize, usize)> {
    if a.dims().len() != 2 || a.dims() != b.dims() {
        return Err(Error::shape(format!("flow needs two equal (H, W) frames, got {} and {}", a.shape(), b.shape())));
    }
    Ok((a.dims()[0], a.dims()[1]))
}

/// Spatial central differences with replicated borders, averaged over both
/// frames; temporal forward difference.
fn derivatives(a: &Tensor, b: &Tensor) -> Result<Derivatives> {
    let (h, w) = frame_dims(a, b)?;
    let (pa, pb) = (a.data(), b.data());
    let at = |p: &[f32], y: usize, x: usize| f64::from(p[y * w + x]);
    let mut ix = vec![0f64; h * w];
    let mut iy = vec![0f64; h * w];
    let mut it = vec![0f64; h * w];
    for y in 0..h {
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let i = y * w + x;
            ix[i] = 0.25 * (at(pa, y, xr) - at(pa, y, xl) + at(pb, y, xr) - at(pb, y, xl));
            iy[i] = 0.25 * (at(pa, yd, x) - at(pa, yu, x) + at(pb, yd, x) - at(pb, yu, x));
            it[i] = at(pb, y, x) - at(pa, y, x);
        }
    }
    Ok(Derivatives { h, w, ix, iy, it })
}

/// Per-pixel constants of the update: neighbour count and the data-term
/// factor `1 / (alpha² n + Ix² + Iy²)`.
fn update_coefficients(d: &Derivatives, alpha2: f64) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = (d.h, d.w);
    let mut inv_n = vec![0f64; h * w];
    let mut inv_den = vec![0f64; h * w];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let n = [y > 0, y + 1 < h, x > 0, x + 1 < w].iter().filter(|&&b| b).count() as f64;
            let g2 = d.ix[i] * d.ix[i] + d.iy[i] * d.iy[i];
            inv_n[i] = if n > 0.0 { 1.0 / n } else { 0.0 };
            let den = alpha2 * n + g2;
            inv_den[i] = if den > 0.0 { 1.0 / den } else { 0.0 };
        }
    }
    (inv_n, inv_den)
}

fn sweep(d: &Derivatives, coef: &(Vec<f64>, Vec<f64>), u: &mut [f64], v: &mut [f64], colour: usize) {
    let (h, w) = (d.h, d.w);
    let (inv_n, inv_den) = coef;
    for y in 0..h {
        let row = y * w;
        for x in ((y + colour) % 2..w).step_by(2) {
            let i = row + x;
            let (mut su, mut sv) = (0f64, 0f64);
            if y > 0 {
                su += u[i - w];
                sv += v[i - w];
            }
            if y + 1 < h {
                su += u[i + w];
                sv += v[i + w];
            }
            if x > 0 {
                su += u[i - 1];
                sv += v[i - 1];
            }
            if x + 1 < w {
                su += u[i + 1];
                sv += v[i + 1];
            }
            let (ix, iy, it) = (d.ix[i], d.iy[i], d.it[i]);
            // with no neighbours (a 1x1 frame) the means are zero and this
            // reduces to the minimum-norm data solution
            let (ub, vb) = (su * inv_n[i], sv * inv_n[i]);
            let k = (ix * ub + iy * vb + it) * inv_den[i];
            u[i] = ub - ix * k;
            v[i] = vb - iy * k;
        }
    }
}

fn energy(d: &Derivatives, alpha2: f64, u: &[f64], v: &[f64]) -> f64 {
    let mut data = 0f64;
    let mut smooth = 0f64;
    for y in 0..d.h {
        for x in 0..d.w {
            let i = y * d.w + x;
            let r = d.ix[i] * u[i] + d.iy[i] * v[i] + d.it[i];
            data += r * r;
            if x + 1 < d.w {
                smooth += (u[i] - u[i + 1]).powi(2) + (v[i] - v[i + 1]).powi(2);
            }
            if y + 1 < d.h {
                smooth += (u[i] - u[i + d.w]).powi(2) + (v[i] - v[i + d.w]).powi(2);
            }
        }
    }
    data + alpha2 * smooth
}

fn solve(a: &Tensor, b: &Tensor, params: &FlowParams, mut on_iteration: Option<&mut dyn FnMut(f64)>) -> Result<(Tensor, Tensor)> {
    params.validate()?;
    let d = derivatives(a, b)?;
    let alpha2 = params.alpha * params.alpha;
    let mut u = vec![0f64; d.h * d.w];
    let mut v = vec![0f64; d.h * d.w];
    let coef = update_coefficients(&d, alpha2);
    for _ in 0..params.iterations {
        sweep(&d, &coef, &mut u, &mut v, 0);
        sweep(&d, &coef, &mut u, &mut v, 1);
        if let Some(f) = on_iteration.as_mut() {
            f(energy(&d, alpha2, &u, &v));
        }
    }
    let to_tensor = |f: Vec<f64>| Tensor::from_vec(&[d.h, d.w], f.into_iter().map(|x| x as f32).collect());
    Ok((to_tensor(u)?, to_tensor(v)?))
}

/// Flow `(Vx, Vy)` from `frame_a` to `frame_b`, each `(H, W)`, in pixels.
pub fn horn_schunck_flow(frame_a: &Tensor, frame_b: &Tensor, params: &FlowParams) -> Result<(Tensor, Tensor)> {
    solve(frame_a, frame_b, params, None)
}

/// Like [`horn_schunck_flow`], also returning the energy after every
/// iteration.
pub fn horn_schunck_flow_traced(
    frame_a: &Tensor,
    frame_b: &Tensor,
    params: &FlowParams,
) -> Result<(Tensor, Tensor, Vec<f64>)> {
    let mut energies = Vec::with_capacity(params.iterations);
    let (u, v) = solve(frame_a, frame_b, params, Some(&mut |e| energies.push(e)))?;
    Ok((u, v, energies))
}

/// The Horn–Schunck energy of a given flow field.
pub fn horn_schunck_energy(frame_a: &Tensor, frame_b: &Tensor, vx: &Tensor, vy: &Tensor, alpha: f64) -> Result<f64> {
    let d = derivatives(frame_a, frame_b)?;
    if vx.dims() != frame_a.dims() || vy.dims() != frame_a.dims() {
        return Err(Error::shape("flow field does not match the frames"));
    }
    let u: Vec<f64> = vx.data().iter().map(|&x| f64::from(x)).collect();
    let v: Vec<f64> = vy.data().iter().map(|&x| f64::from(x)).collect();
    Ok(energy(&d, alpha * alpha, &u, &v))
}
