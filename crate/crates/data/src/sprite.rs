//! The articulated stick figure: poses per motion program and rasterization.
//!
//! Limb angles are measured from straight down, positive toward the
//! figure's facing side (+x before mirroring). The body is drawn as capsules
//! (segments with a radius) and a disc for the head, with a half-pixel
//! anti-aliasing ramp.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::action::{ActionSpec, MotionProgram};

const TORSO: f64 = 8.0;
const HEAD_RADIUS: f64 = 3.0;
const UPPER_ARM: f64 = 5.0;
const FOREARM: f64 = 5.0;
const THIGH: f64 = 6.0;
const SHIN: f64 = 6.0;
const HIP_HALF_WIDTH: f64 = 1.5;
const LIMB_RADIUS: f64 = 1.2;
const TORSO_RADIUS: f64 = 1.5;
/// Frames per limb cycle at unit tempo.
const CYCLE_FRAMES: f64 = 16.0;

/// Joint angles and whole-body placement for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    /// Torso tilt, positive toward the facing side.
    pub lean: f64,
    /// `(shoulder, elbow)` per arm, the elbow angle relative to the upper arm.
    pub arms: [(f64, f64); 2],
    /// `(hip, knee)` per leg, the knee angle relative to the thigh.
    pub legs: [(f64, f64); 2],
    /// Height of the lowest foot above the ground line, in unscaled units.
    pub lift: f64,
    /// Horizontal foreshortening of the body (1 facing the camera).
    pub x_scale: f64,
}

fn dir(angle: f64) -> (f64, f64) {
    (angle.sin(), angle.cos())
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// The pose of `spec`'s program at `frame` of a `length`-frame clip.
pub fn pose_at(spec: &ActionSpec, frame: usize, length: usize) -> Pose {
    use MotionProgram::*;
    let f = frame as f64;
    let theta = TAU * (spec.speed * f / CYCLE_FRAMES + spec.limb_phase);
    let s = theta.sin();
    // gesture progress for one-shot programs: rise, then hold
    let gesture = smoothstep(spec.speed * f / (0.5 * (length.max(2) - 1) as f64));
    // 0 at rest, 1 at the peak of a cycle
    let swell = 0.5 * (1.0 - theta.cos());
    let mut p = Pose {
        arms: [(-0.15, 0.0), (0.15, 0.0)],
        legs: [(-0.1, 0.0), (0.1, 0.0)],
        x_scale: 1.0,
        ..Pose::default()
    };
    match spec.program {
        Walk => {
            p.legs = [(0.45 * s, 0.0), (-0.45 * s, 0.0)];
            p.arms = [(-0.4 * s, 0.3), (0.4 * s, 0.3)];
        }
        Run => {
            let knee = |k: f64| -0.3 - 0.6 * k.max(0.0);
            p.lean = 0.1;
            p.legs = [(0.6 * s, knee(theta.cos())), (-0.6 * s, knee(-theta.cos()))];
            let elbow = 1.3 + 0.4 * s;
            p.arms = [(-0.6 * s, elbow), (0.6 * s, elbow)];
            p.lift = 1.0 * s.abs();
        }
        CrouchWalk => {
            p.lean = 0.45;
            p.legs = [(0.35 * s + 0.3, -0.9), (-0.35 * s + 0.3, -0.9)];
            p.arms = [(-0.3 * s + 0.3, 0.4), (0.3 * s + 0.3, 0.4)];
        }
        Jump => {
            let u = (theta / TAU).rem_euclid(1.0);
            if u < 0.6 {
                let a = u / 0.6;
                p.lift = 6.0 * 4.0 * a * (1.0 - a);
                let raise = 0.3 + 2.5 * (PI * a).sin();
                p.arms = [(-raise, 0.0), (raise, 0.0)];
                p.legs = [(-0.1, 0.0), (0.1, 0.0)];
            } else {
                let k = 1.2 * (PI * (u - 0.6) / 0.4).sin();
                p.legs = [(-0.1 - 0.5 * k, k), (0.1 + 0.5 * k, -k)];
                p.arms = [(-0.3, 0.0), (0.3, 0.0)];
            }
        }
        Wave => {
            p.arms = [(-0.1, 0.0), (2.5, 0.7 * s)];
            p.legs = [(-0.12, 0.0), (0.12, 0.0)];
        }
        Kick => {
            let up = s.max(0.0);
            p.legs = [(-0.05, 0.0), (1.5 * up, -0.8 * (1.0 - up))];
            p.arms = [(-0.6, 0.0), (0.6, 0.0)];
        }
        Spin => {
            p.x_scale = theta.cos();
            p.arms = [(-FRAC_PI_2, 0.0), (FRAC_PI_2, 0.0)];
            p.legs = [(-0.15, 0.0), (0.15, 0.0)];
        }
        Clap => {
            // upper arms swing in while the forearms fold toward the
            // midline; the hands meet at the peak of each cycle
            let shoulder = 1.3 - 0.4 * swell;
            let forearm = 0.2 + 2.05 * swell;
            p.arms = [(-shoulder, shoulder + forearm), (shoulder, -shoulder - forearm)];
        }
        Point => {
            p.arms = [(-0.1, 0.0), (FRAC_PI_2 * gesture, 0.0)];
        }
        JumpingJacks => {
            let arm = 0.2 + 2.6 * swell;
            let leg = 0.05 + 0.35 * swell;
            p.arms = [(-arm, 0.0), (arm, 0.0)];
            p.legs = [(-leg, 0.0), (leg, 0.0)];
            p.lift = 2.0 * s.abs();
        }
        Squat => {
            let k = 1.6 * swell;
            p.legs = [(-0.1 - 0.5 * k, k), (0.1 + 0.5 * k, -k)];
            p.arms = [(-0.25, 0.0), (0.25, 0.0)];
        }
        Bow => {
            p.lean = 1.1 * gesture;
            p.arms = [(0.2 * gesture, 0.0), (0.2 * gesture, 0.0)];
        }
    }
    p
}

/// A drawable primitive in canvas coordinates: a capsule from `a` to `b`
/// (a disc when they coincide).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub radius: f64,
    /// Whether this is the head (drawn in the palette's head colour).
    pub head: bool,
}

impl Capsule {
    /// Signed coverage of pixel centre `p`: `radius + 0.5 - distance`,
    /// clamped to `[0, 1]`.
    pub fn coverage(&self, p: (f64, f64)) -> f64 {
        let (dx, dy) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((p.0 - self.a.0) * dx + (p.1 - self.a.1) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (qx, qy) = (self.a.0 + t * dx - p.0, self.a.1 + t * dy - p.1);
        (self.radius + 0.5 - (qx * qx + qy * qy).sqrt()).clamp(0.0, 1.0)
    }

    /// `[x0, x1, y0, y1]` of the region where coverage can be non-zero.
    pub fn bounds(&self) -> [f64; 4] {
        let r = self.radius + 0.5;
        [
            self.a.0.min(self.b.0) - r,
            self.a.0.max(self.b.0) + r,
            self.a.1.min(self.b.1) - r,
            self.a.1.max(self.b.1) + r,
        ]
    }
}

/// The figure's primitives for one pose. The lowest point of the feet sits
/// `pose.lift · scale` above `ground_y`; the hips are centred on `hip_x`.
pub fn skeleton(pose: &Pose, scale: f64, mirrored: bool, hip_x: f64, ground_y: f64) -> Vec<Capsule> {
    let up = (pose.lean.sin(), -pose.lean.cos());
    let neck = (TORSO * up.0, TORSO * up.1);
    let head = (neck.0 + (HEAD_RADIUS + 1.0) * up.0, neck.1 + (HEAD_RADIUS + 1.0) * up.1);
    let mut parts: Vec<((f64, f64), (f64, f64), f64, bool)> = vec![((0.0, 0.0), neck, TORSO_RADIUS, false)];
    parts.push((head, head, HEAD_RADIUS, true));
    for &(shoulder, elbow) in &pose.arms {
        let s = (neck.0 - 1.0 * up.0, neck.1 - 1.0 * up.1);
        let (ex, ey) = dir(shoulder);
        let e = (s.0 + UPPER_ARM * ex, s.1 + UPPER_ARM * ey);
        let (hx, hy) = dir(shoulder + elbow);
        let h = (e.0 + FOREARM * hx, e.1 + FOREARM * hy);
        parts.push((s, e, LIMB_RADIUS, false));
        parts.push((e, h, LIMB_RADIUS, false));
    }
    for (i, &(hip, knee)) in pose.legs.iter().enumerate() {
        let side = if i == 0 { -1.0 } else { 1.0 };
        let h = (side * HIP_HALF_WIDTH, 0.0);
        let (kx, ky) = dir(hip);
        let k = (h.0 + THIGH * kx, h.1 + THIGH * ky);
        let (fx, fy) = dir(hip + knee);
        let f = (k.0 + SHIN * fx, k.1 + SHIN * fy);
        parts.push((h, k, LIMB_RADIUS, false));
        parts.push((k, f, LIMB_RADIUS, false));
    }
    // lowest extent below the hips, before scaling, including the radius
    let lowest = parts
        .iter()
        .map(|&(a, b, r, _)| a.1.max(b.1) + r)
        .fold(f64::NEG_INFINITY, f64::max);
    let sx = if mirrored { -pose.x_scale } else { pose.x_scale };
    let place = |p: (f64, f64)| {
        (
            hip_x + scale * sx * p.0,
            ground_y - scale * (lowest + pose.lift) + scale * p.1,
        )
    };
    parts
        .into_iter()
        .map(|(a, b, r, head)| Capsule {
            a: place(a),
            b: place(b),
            radius: scale * r,
            head,
        })
        .collect()
}

/// `[x0, x1, y0, y1]` enclosing every primitive's non-zero coverage.
pub fn bounds(capsules: &[Capsule]) -> [f64; 4] {
    capsules.iter().map(Capsule::bounds).fold(
        [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
        |acc, b| [acc[0].min(b[0]), acc[1].max(b[1]), acc[2].min(b[2]), acc[3].max(b[3])],
    )
}

/// Figure placement for every frame of an aligned clip: hips centred
/// horizontally (drifting with the travel velocity) and feet on a ground
/// line near the bottom. Frame coordinates are local to a
/// `canvas = (H, W)` region.
pub fn figure_frames(spec: &ActionSpec, canvas: (usize, usize), length: usize) -> Vec<Vec<Capsule>> {
    let (h, w) = canvas;
    let character = spec.character();
    let (vx, vy) = spec.velocity();
    let mid = 0.5 * (length as f64 - 1.0);
    let ground = h as f64 - 0.1 * h as f64;
    (0..length)
        .map(|f| {
            let pose = pose_at(spec, f, length);
            let dt = f as f64 - mid;
            skeleton(
                &pose,
                character.scale,
                character.mirrored,
                0.5 * w as f64 + vx * dt,
                ground + vy * dt,
            )
        })
        .collect()
}

/// Body and head colours per palette. Every colour is far in luma from the
/// background range `[0.3, 0.65]` so the figure shows up in grayscale.
pub const PALETTES: [([f32; 3], [f32; 3]); 5] = [
    ([0.98, 0.95, 0.85], [1.0, 0.85, 0.7]),
    ([0.08, 0.08, 0.25], [0.15, 0.1, 0.05]),
    ([0.9, 0.95, 1.0], [1.0, 0.9, 0.8]),
    ([0.25, 0.03, 0.03], [0.1, 0.05, 0.02]),
    ([0.03, 0.18, 0.08], [0.12, 0.08, 0.05]),
];

/// Draws `capsules` over an `(H, W, 3)` frame, blending by coverage, and
/// returns the per-pixel coverage. Pixel `(y, x)` has centre
/// `(x + 0.5, y + 0.5)`; `origin` shifts the capsules into frame
/// coordinates.
pub fn draw(frame: &mut [f32], width: usize, capsules: &[Capsule], palette: usize, origin: (f64, f64)) -> Vec<f32> {
    let height = frame.len() / (3 * width);
    let mut coverage = vec![0f32; width * height];
    let b = bounds(capsules);
    let clampi = |v: f64, hi: usize| (v.floor().max(0.0) as usize).min(hi);
    let (x0, x1) = (clampi(b[0] + origin.0, width), clampi(b[1] + origin.0 + 1.0, width));
    let (y0, y1) = (clampi(b[2] + origin.1, height), clampi(b[3] + origin.1 + 1.0, height));
    let (body, head) = PALETTES[palette % PALETTES.len()];
    for y in y0..y1 {
        for x in x0..x1 {
            let p = (x as f64 + 0.5 - origin.0, y as f64 + 0.5 - origin.1);
            let mut best = 0.0;
            let mut is_head = false;
            for c in capsules {
                let v = c.coverage(p);
                if v > best {
                    best = v;
                    is_head = c.head;
                }
            }
            if best <= 0.0 {
                continue;
            }
            let colour = if is_head { head } else { body };
            let a = best as f32;
            let px = &mut frame[(y * width + x) * 3..(y * width + x) * 3 + 3];
            for (dst, src) in px.iter_mut().zip(colour) {
                *dst = *dst * (1.0 - a) + src * a;
            }
            coverage[y * width + x] = a;
        }
    }
    coverage
}
