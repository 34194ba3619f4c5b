//! Dense row-major `f32` tensors.
//!
//! Five-axis tensors follow the `(batch, channel, time, height, width)`
//! convention everywhere in the crate.

use std::io::{Read, Write};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

pub const MAX_RANK: usize = 5;

const BLOB_MAGIC: &[u8; 4] = b"APTN";
const BLOB_VERSION: u32 = 1;

/// Extents of a tensor: 1 to 5 axes, each at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(Error::shape(format!(
                "rank must be 1..={MAX_RANK}, got {}",
                dims.len()
            )));
        }
        if let Some(axis) = dims.iter().position(|&d| d == 0) {
            return Err(Error::shape(format!("axis {axis} has zero extent")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Size(format!("element count of {dims:?} overflows")))?;
        Ok(Shape(dims.to_vec()))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for i in (0..self.0.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }

    pub fn flatten(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.rank() {
            return Err(Error::shape(format!(
                "index rank {} != tensor rank {}",
                index.len(),
                self.rank()
            )));
        }
        let mut flat = 0;
        for (axis, (&i, &d)) in index.iter().zip(&self.0).enumerate() {
            if i >= d {
                return Err(Error::arg(format!("index {i} out of range on axis {axis} (extent {d})")));
            }
            flat = flat * d + i;
        }
        Ok(flat)
    }

    pub fn unflatten(&self, mut flat: usize) -> Result<Vec<usize>> {
        if flat >= self.numel() {
            return Err(Error::arg(format!("flat index {flat} out of range")));
        }
        let mut index = vec![0; self.rank()];
        for axis in (0..self.rank()).rev() {
            index[axis] = flat % self.0[axis];
            flat /= self.0[axis];
        }
        Ok(index)
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join("x"))
    }
}

/// Dense tensor of 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::full(dims, 0.0)
    }

    pub fn ones(dims: &[usize]) -> Result<Self> {
        Self::full(dims, 1.0)
    }

    pub fn full(dims: &[usize], value: f32) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = vec![value; shape.numel()];
        Ok(Tensor { shape, data })
    }

    pub fn scalar(value: f32) -> Self {
        Tensor {
            shape: Shape(vec![1]),
            data: vec![value],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f32>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if data.len() != shape.numel() {
            return Err(Error::shape(format!(
                "{} values do not fill shape {shape}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite value in tensor data".into()));
        }
        Ok(Tensor { shape, data })
    }

    /// Uniform samples in `[lo, hi)`, reproducible from `seed`.
    pub fn random_uniform(dims: &[usize], lo: f32, hi: f32, seed: u64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::arg(format!("need finite lo < hi, got [{lo}, {hi})")));
        }
        let shape = Shape::new(dims)?;
        let mut rng = rng::stream(seed, rng::stream_id("random_uniform", 0));
        let data = (0..shape.numel())
            .map(|_| {
                let v = lo + (hi - lo) * rng.gen::<f32>();
                // rounding can land exactly on hi
                if v >= hi {
                    f32::from_bits(hi.to_bits() - 1).max(lo)
                } else {
                    v
                }
            })
            .collect();
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> Result<f32> {
        Ok(self.data[self.shape.flatten(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f32) -> Result<()> {
        let i = self.shape.flatten(index)?;
        self.data[i] = value;
        Ok(())
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.numel() != self.data.len() {
            return Err(Error::shape(format!("cannot reshape {} into {shape}", self.shape)));
        }
        Ok(Tensor {
            shape,
            data: self.data,
        })
    }

    pub fn fill(&mut self, value: f32) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two same-shape tensors.
    pub fn map_binary(&self, other: &Tensor, f: impl Fn(f32, f32) -> f32) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "elementwise op on {} and {}",
                self.shape, other.shape
            )));
        }
        let data: Vec<f32> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("elementwise op produced a non-finite value".into()));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        self.map_binary(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Self> {
        self.map_binary(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Self> {
        self.map_binary(other, |a, b| a * b)
    }

    /// Sum over one axis (removed from the result) or over everything
    /// (shape `(1,)`). Partial sums are accumulated in `f64`.
    pub fn reduce_sum(&self, axis: Option<usize>) -> Result<Self> {
        let Some(axis) = axis else {
            let total: f64 = self.data.iter().map(|&v| f64::from(v)).sum();
            return Ok(Tensor::scalar(total as f32));
        };
        let dims = self.dims();
        if axis >= dims.len() {
            return Err(Error::arg(format!("axis {axis} out of range for rank {}", dims.len())));
        }
        let outer: usize = dims[..axis].iter().product();
        let extent = dims[axis];
        let inner: usize = dims[axis + 1..].iter().product();
        let mut acc = vec![0f64; outer * inner];
        for o in 0..outer {
            for k in 0..extent {
                let base = (o * extent + k) * inner;
                for i in 0..inner {
                    acc[o * inner + i] += f64::from(self.data[base + i]);
                }
            }
        }
        let mut out_dims: Vec<usize> = dims.iter().enumerate().filter(|&(a, _)| a != axis).map(|(_, &d)| d).collect();
        if out_dims.is_empty() {
            out_dims.push(1);
        }
        Tensor::from_vec(&out_dims, acc.into_iter().map(|v| v as f32).collect())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum()
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes the binary blob form: magic `APTN`, version, rank, `u64`
    /// extents and raw values, all little-endian.
    pub fn write_blob<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BLOB_MAGIC)?;
        w.write_all(&BLOB_VERSION.to_le_bytes())?;
        w.write_all(&(self.shape.rank() as u32).to_le_bytes())?;
        for &d in self.dims() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_blob<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BLOB_MAGIC {
            return Err(Error::Format(format!("bad tensor magic {magic:?}")));
        }
        let version = read_u32(&mut r)?;
        if version != BLOB_VERSION {
            return Err(Error::Format(format!("unsupported tensor blob version {version}")));
        }
        let rank = read_u32(&mut r)? as usize;
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::Format(format!("bad tensor rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            let d = read_u64(&mut r)?;
            dims.push(usize::try_from(d).map_err(|_| Error::Size(format!("extent {d} too large")))?);
        }
        let shape = Shape::new(&dims)?;
        let mut bytes = vec![0u8; shape.numel() * 4];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Tensor { shape, data })
    }

    /// Constructor for internal producers that already guarantee the
    /// length invariant.
    pub(crate) fn from_parts(dims: &[usize], data: Vec<f32>) -> Self {
        let shape = Shape::new(dims).expect("valid internal shape");
        debug_assert_eq!(shape.numel(), data.len());
        Tensor { shape, data }
    }
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
