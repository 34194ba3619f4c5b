//! 8-bit PNG output: feature-map grids and detection overlays.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use actparse_core::{Error, Result, Tensor};
use actparse_motion::VideoClip;
use actparse_parse::Detection;

fn write_png(path: &Path, width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<()> {
    let file = BufWriter::new(fs::File::create(path)?);
    let mut enc = png::Encoder::new(file, width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header().map_err(|e| Error::Format(format!("png header: {e}")))?;
    w.write_image_data(data).map_err(|e| Error::Format(format!("png data: {e}")))?;
    w.finish().map_err(|e| Error::Format(format!("png finish: {e}")))?;
    Ok(())
}

/// Tile layout for `n` maps of `h` x `w`: a near-square grid with one-pixel
/// gaps. Returns `(columns, rows, width, height)`.
pub fn grid_geometry(n: usize, h: usize, w: usize) -> (usize, usize, usize, usize) {
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols);
    (cols, rows, cols * w + cols.saturating_sub(1), rows * h + rows.saturating_sub(1))
}

/// One grayscale grid per temporal slice of `(C, T, H, W)` maps. Values are
/// scaled to `0..=255` over the whole grid; a constant grid becomes black.
pub fn feature_grids(maps: &Tensor) -> Result<Vec<(usize, usize, Vec<u8>)>> {
    let d = maps.dims();
    if d.len() != 4 {
        return Err(Error::shape(format!("feature maps must be (C, T, H, W), got {}", maps.shape())));
    }
    let (c, t, h, w) = (d[0], d[1], d[2], d[3]);
    let (cols, _, gw, gh) = grid_geometry(c, h, w);
    let mut out = Vec::with_capacity(t);
    for k in 0..t {
        let slice = |ch: usize| &maps.data()[((ch * t + k) * h) * w..((ch * t + k) * h + h) * w];
        let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
        for ch in 0..c {
            for &v in slice(ch) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
        let mut img = vec![0u8; gw * gh];
        for ch in 0..c {
            let (gx, gy) = ((ch % cols) * (w + 1), (ch / cols) * (h + 1));
            for (y, row) in slice(ch).chunks(w).enumerate() {
                for (x, &v) in row.iter().enumerate() {
                    img[(gy + y) * gw + gx + x] = ((v - lo) * scale).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        out.push((gw, gh, img));
    }
    Ok(out)
}

/// Writes `{prefix}_tNN.png` for every slice; returns the paths.
pub fn write_feature_grids(maps: &Tensor, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (k, (w, h, img)) in feature_grids(maps)?.into_iter().enumerate() {
        let p = dir.join(format!("{prefix}_t{k:02}.png"));
        write_png(&p, w, h, png::ColorType::Grayscale, &img)?;
        paths.push(p);
    }
    Ok(paths)
}

const BOX_COLOURS: [[u8; 3]; 6] = [[230, 60, 60], [60, 200, 60], [70, 110, 240], [240, 200, 40], [200, 70, 220], [40, 210, 220]];

/// Frames of `video` with the outline of every detection active in that
/// frame, as `frame_NNNNN.png`.
pub fn write_overlays(video: &VideoClip, detections: &[Detection], dir: &Path) -> Result<usize> {
    fs::create_dir_all(dir)?;
    let (h, w, c) = (video.height(), video.width(), video.channels());
    for f in 0..video.len() {
        let px = &video.frames().data()[f * h * w * c..(f + 1) * h * w * c];
        let mut img: Vec<u8> = Vec::with_capacity(h * w * 3);
        for p in px.chunks(c) {
            for k in 0..3 {
                img.push((p[k.min(c - 1)] * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        for d in detections {
            let tr = d.volume.t_range();
            if (f as f64) < tr[0] || (f as f64) >= tr[1] {
                continue;
            }
            let colour = BOX_COLOURS[d.category % BOX_COLOURS.len()];
            let clampx = |v: f64| (v.floor().max(0.0) as usize).min(w - 1);
            let clampy = |v: f64| (v.floor().max(0.0) as usize).min(h - 1);
            let (x0, x1) = (clampx(d.volume.x_range()[0]), clampx(d.volume.x_range()[1] - 1.0));
            let (y0, y1) = (clampy(d.volume.y_range()[0]), clampy(d.volume.y_range()[1] - 1.0));
            let mut put = |x: usize, y: usize| img[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&colour);
            for x in x0..=x1 {
                put(x, y0);
                put(x, y1);
            }
            for y in y0..=y1 {
                put(x0, y);
                put(x1, y);
            }
        }
        write_png(&dir.join(format!("frame_{f:05}.png")), w, h, png::ColorType::Rgb, &img)?;
    }
    Ok(video.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiling_arithmetic() {
        assert_eq!(grid_geometry(128, 56, 56), (12, 11, 12 * 56 + 11, 11 * 56 + 10));
        assert_eq!(grid_geometry(1, 4, 5), (1, 1, 5, 4));
        assert_eq!(grid_geometry(8, 3, 3), (3, 3, 11, 11));
    }

    #[test]
    fn png_dimensions_match_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let maps = Tensor::random_uniform(&[5, 2, 4, 6], -1.0, 1.0, 3).unwrap();
        let paths = write_feature_grids(&maps, dir.path(), "conv1").unwrap();
        assert_eq!(paths.len(), 2);
        let dec = png::Decoder::new(fs::File::open(&paths[0]).unwrap());
        let reader = dec.read_info().unwrap();
        let info = reader.info();
        assert_eq!((info.width, info.height), (3 * 6 + 2, 2 * 4 + 1));
    }
}
