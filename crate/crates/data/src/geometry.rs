//! Axis-aligned spatio-temporal boxes.
//!
//! Coordinates are continuous: pixel column `i` spans `[i, i + 1)`, frame
//! `k` spans `[k, k + 1)`, so a box covering a whole `H x W x T` video has
//! centre `(W/2, H/2, T/2)` and extents `(W, H, T)`.

use actparse_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub cx: f64,
    pub cy: f64,
    pub ct: f64,
    pub w: f64,
    pub h: f64,
    pub l: f64,
}

impl Cuboid {
    pub fn new(cx: f64, cy: f64, ct: f64, w: f64, h: f64, l: f64) -> Self {
        Cuboid { cx, cy, ct, w, h, l }
    }

    /// Box spanning `[x0, x1) x [y0, y1) x [t0, t1)`.
    pub fn from_bounds(x: [f64; 2], y: [f64; 2], t: [f64; 2]) -> Self {
        Cuboid {
            cx: 0.5 * (x[0] + x[1]),
            cy: 0.5 * (y[0] + y[1]),
            ct: 0.5 * (t[0] + t[1]),
            w: x[1] - x[0],
            h: y[1] - y[0],
            l: t[1] - t[0],
        }
    }

    /// The box covering a whole video of `(T, H, W)`.
    pub fn full(extents: [usize; 3]) -> Self {
        let [t, h, w] = extents;
        Cuboid::from_bounds([0.0, w as f64], [0.0, h as f64], [0.0, t as f64])
    }

    pub fn x_range(&self) -> [f64; 2] {
        [self.cx - 0.5 * self.w, self.cx + 0.5 * self.w]
    }

    pub fn y_range(&self) -> [f64; 2] {
        [self.cy - 0.5 * self.h, self.cy + 0.5 * self.h]
    }

    pub fn t_range(&self) -> [f64; 2] {
        [self.ct - 0.5 * self.l, self.ct + 0.5 * self.l]
    }

    pub fn volume(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0) * self.l.max(0.0)
    }

    pub fn is_finite(&self) -> bool {
        [self.cx, self.cy, self.ct, self.w, self.h, self.l].iter().all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() || self.w <= 0.0 || self.h <= 0.0 || self.l <= 0.0 {
            return Err(Error::geometry(format!("cuboid {self:?} needs finite positive extents")));
        }
        Ok(())
    }

    pub fn intersection_volume(&self, other: &Cuboid) -> f64 {
        let overlap = |a: [f64; 2], b: [f64; 2]| (a[1].min(b[1]) - a[0].max(b[0])).max(0.0);
        overlap(self.x_range(), other.x_range())
            * overlap(self.y_range(), other.y_range())
            * overlap(self.t_range(), other.t_range())
    }

    /// Intersection over union, in `[0, 1]`; zero when either box is empty.
    pub fn iou(&self, other: &Cuboid) -> f64 {
        let inter = self.intersection_volume(other);
        let union = self.volume() + other.volume() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }

    /// The part of `self` inside `bounds`, or `None` if they do not overlap.
    pub fn clip_to(&self, bounds: &Cuboid) -> Option<Cuboid> {
        let cut = |a: [f64; 2], b: [f64; 2]| [a[0].max(b[0]), a[1].min(b[1])];
        let (x, y, t) = (
            cut(self.x_range(), bounds.x_range()),
            cut(self.y_range(), bounds.y_range()),
            cut(self.t_range(), bounds.t_range()),
        );
        (x[1] > x[0] && y[1] > y[0] && t[1] > t[0]).then(|| Cuboid::from_bounds(x, y, t))
    }

    pub fn contains(&self, other: &Cuboid) -> bool {
        let inside = |a: [f64; 2], b: [f64; 2]| b[0] >= a[0] - 1e-9 && b[1] <= a[1] + 1e-9;
        inside(self.x_range(), other.x_range())
            && inside(self.y_range(), other.y_range())
            && inside(self.t_range(), other.t_range())
    }

    pub fn to_fields(&self) -> [f64; 6] {
        [self.cx, self.cy, self.ct, self.w, self.h, self.l]
    }
}

/// IoU of two cuboids.
pub fn iou_3d(a: &Cuboid, b: &Cuboid) -> f64 {
    a.iou(b)
}
