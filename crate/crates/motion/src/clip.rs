//! Raw and appearance-motion clip containers, grayscale conversion and clip
//! files.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use actparse_core::{Error, Result, Tensor};

/// Decoded video frames, `(T, H, W, C)` with `C` either 1 or 3 and pixel
/// values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    frames: Tensor,
}

impl VideoClip {
    pub fn new(frames: Tensor) -> Result<Self> {
        let d = frames.dims();
        if d.len() != 4 {
            return Err(Error::shape(format!("clip must be (T, H, W, C), got {}", frames.shape())));
        }
        if d[3] != 1 && d[3] != 3 {
            return Err(Error::Format(format!("unsupported channel count {}", d[3])));
        }
        if d[0] < 2 {
            return Err(Error::arg(format!("clip needs at least 2 frames, got {}", d[0])));
        }
        if let Some(v) = frames.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::arg(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(VideoClip { frames })
    }

    /// Single-channel clip from `(T, H, W)` intensities.
    pub fn from_gray(gray: &Tensor) -> Result<Self> {
        let d = gray.dims();
        if d.len() != 3 {
            return Err(Error::shape(format!("expected (T, H, W), got {}", gray.shape())));
        }
        Self::new(gray.clone().reshape(&[d[0], d[1], d[2], 1])?)
    }

    pub fn frames(&self) -> &Tensor {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.dims()[0]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn height(&self) -> usize {
        self.frames.dims()[1]
    }

    pub fn width(&self) -> usize {
        self.frames.dims()[2]
    }

    pub fn channels(&self) -> usize {
        self.frames.dims()[3]
    }

    /// Writes a clip directory: `clip.txt` holding `T H W C f32` and one
    /// `(H, W, C)` tensor blob per frame.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let (t, h, w, c) = (self.len(), self.height(), self.width(), self.channels());
        fs::write(dir.join("clip.txt"), format!("{t} {h} {w} {c} f32\n"))?;
        let frame_len = h * w * c;
        for (i, frame) in self.frames.data().chunks_exact(frame_len).enumerate() {
            let mut out = BufWriter::new(fs::File::create(dir.join(format!("frame_{i:05}.bin")))?);
            Tensor::from_vec(&[h, w, c], frame.to_vec())?.write_blob(&mut out)?;
            out.flush()?;
        }
        Ok(())
    }

    /// Reads either a clip directory (see [`VideoClip::write_dir`]) or a
    /// single `(T, H, W, C)` tensor blob.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_dir() {
            return Self::new(Tensor::read_blob(BufReader::new(fs::File::open(path)?))?);
        }
        let manifest = fs::read_to_string(path.join("clip.txt"))?;
        let fields: Vec<&str> = manifest.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(1, "clip manifest must read 'T H W C f32'"));
        }
        if fields[4] != "f32" {
            return Err(Error::parse(1, format!("unsupported pixel format '{}'", fields[4])));
        }
        let mut ext = [0usize; 4];
        for (e, f) in ext.iter_mut().zip(&fields[..4]) {
            *e = f.parse().map_err(|_| Error::parse(1, format!("bad extent '{f}'")))?;
        }
        let [t, h, w, c] = ext;
        let mut data = Vec::with_capacity(t * h * w * c);
        for i in 0..t {
            let frame = Tensor::read_blob(BufReader::new(fs::File::open(path.join(format!("frame_{i:05}.bin")))?))?;
            if frame.dims() != [h, w, c] {
                return Err(Error::Format(format!("frame {i} has shape {}, manifest says ({h}x{w}x{c})", frame.shape())));
            }
            data.extend_from_slice(frame.data());
        }
        Self::new(Tensor::from_vec(&[t, h, w, c], data)?)
    }
}

/// Intensity plus horizontal and vertical flow, `(3, T, H, W)`. Flow is in
/// pixels per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceMotionClip {
    volume: Tensor,
}

impl AppearanceMotionClip {
    pub fn new(volume: Tensor) -> Result<Self> {
        let d = volume.dims();
        if d.len() != 4 || d[0] != 3 {
            return Err(Error::shape(format!("appearance-motion volume must be (3, T, H, W), got {}", volume.shape())));
        }
        Ok(AppearanceMotionClip { volume })
    }

    pub fn volume(&self) -> &Tensor {
        &self.volume
    }

    pub fn into_volume(self) -> Tensor {
        self.volume
    }

    /// `(T, H, W)`.
    pub fn extents(&self) -> [usize; 3] {
        let d = self.volume.dims();
        [d[1], d[2], d[3]]
    }

    /// One channel as a flat `T·H·W` slice (0 intensity, 1 Vx, 2 Vy).
    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.volume.numel() / 3;
        &self.volume.data()[c * n..(c + 1) * n]
    }
}

/// Luma `0.299 R + 0.587 G + 0.114 B` per pixel, `(T, H, W)`.
pub fn to_grayscale(clip: &VideoClip) -> Result<Tensor> {
    let d = clip.frames().dims();
    let (t, h, w) = (d[0], d[1], d[2]);
    let data: Vec<f32> = match clip.channels() {
        1 => clip.frames().data().to_vec(),
        3 => clip
            .frames()
            .data()
            .chunks_exact(3)
            .map(|p| (0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])) as f32)
            .collect(),
        c => return Err(Error::Format(format!("unsupported channel count {c}"))),
    };
    Tensor::from_vec(&[t, h, w], data)
}
