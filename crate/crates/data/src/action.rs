//! Action specifications and the attribute rule table.
//!
//! Every attribute bit is a predicate over the [`ActionSpec`] that produced
//! a clip, so labels never depend on inspecting pixels. The table is
//! documented in `docs/attributes.md`.

use std::fmt;
use std::str::FromStr;

use actparse_core::model::{NUM_H1, NUM_H2};
use actparse_core::{Error, Result};
use rand::Rng as _;

use actparse_core::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MotionProgram {
    Walk,
    Jump,
    Wave,
    Kick,
    Spin,
    CrouchWalk,
    Clap,
    Point,
    JumpingJacks,
    Squat,
    Bow,
    Run,
}

impl MotionProgram {
    pub const ALL: [MotionProgram; 12] = [
        MotionProgram::Walk,
        MotionProgram::Jump,
        MotionProgram::Wave,
        MotionProgram::Kick,
        MotionProgram::Spin,
        MotionProgram::CrouchWalk,
        MotionProgram::Clap,
        MotionProgram::Point,
        MotionProgram::JumpingJacks,
        MotionProgram::Squat,
        MotionProgram::Bow,
        MotionProgram::Run,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionProgram::Walk => "walk",
            MotionProgram::Jump => "jump",
            MotionProgram::Wave => "wave",
            MotionProgram::Kick => "kick",
            MotionProgram::Spin => "spin",
            MotionProgram::CrouchWalk => "crouch_walk",
            MotionProgram::Clap => "clap",
            MotionProgram::Point => "point",
            MotionProgram::JumpingJacks => "jumping_jacks",
            MotionProgram::Squat => "squat",
            MotionProgram::Bow => "bow",
            MotionProgram::Run => "run",
        }
    }

    /// Programs whose body travels across the frame.
    pub fn translates(self) -> bool {
        matches!(self, MotionProgram::Walk | MotionProgram::CrouchWalk | MotionProgram::Run)
    }

    /// Body speed in pixels per frame at `speed = 1` (zero for programs that
    /// stay in place).
    pub fn base_velocity(self) -> f64 {
        match self {
            MotionProgram::Walk => 1.0,
            MotionProgram::Run => 1.2,
            MotionProgram::CrouchWalk => 0.6,
            _ => 0.0,
        }
    }

    /// Whether the motion repeats, as opposed to a single gesture.
    pub fn is_cyclic(self) -> bool {
        !matches!(self, MotionProgram::Point | MotionProgram::Bow)
    }

    /// Clip length in frames. Travelling programs get short clips so the
    /// figure stays on a 48-pixel canvas.
    pub fn clip_length(self) -> usize {
        match self {
            MotionProgram::Run => 12,
            MotionProgram::Walk => 16,
            MotionProgram::CrouchWalk => 20,
            MotionProgram::Wave | MotionProgram::Clap | MotionProgram::Point => 24,
            _ => 32,
        }
    }
}

impl fmt::Display for MotionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionProgram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown motion program '{s}'")))
    }
}

/// Look of the figure: palette, size and mirroring, all packed in one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Character {
    pub mirrored: bool,
    pub scale: f64,
    pub palette: usize,
}

/// Number of distinct character variants.
pub const NUM_VARIANTS: usize = 30;

impl Character {
    pub fn from_variant(variant: usize) -> Self {
        Character {
            mirrored: variant % 2 == 1,
            scale: [0.9, 1.0, 1.1][(variant / 2) % 3],
            palette: (variant / 6) % 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub category_id: usize,
    pub program: MotionProgram,
    /// Tempo multiplier; travel speed is `speed · base_velocity` px/frame.
    pub speed: f64,
    /// Travel direction in radians, 0 pointing to +x (image right), π/2 to
    /// +y (image down). Ignored by stationary programs.
    pub direction: f64,
    /// Phase offset of the limb cycle, in cycles.
    pub limb_phase: f64,
    pub cyclic: bool,
    pub character_variant: usize,
}

/// Speeds at or above this count as "fast".
pub const FAST_SPEED: f64 = 1.0;

impl ActionSpec {
    /// Draws the free parameters of `program`. Speeds are bimodal, slow in
    /// `[0.6, 0.8]` or fast in `[1.25, 1.5]`, so the "fast" attribute has a
    /// clear margin; travel is horizontal, left or right.
    pub fn sample(program: MotionProgram, category_id: usize, rng: &mut Rng) -> Self {
        let speed = if rng.gen_bool(0.5) {
            rng.gen_range(0.6..0.8)
        } else {
            rng.gen_range(1.25..1.5)
        };
        let direction = if rng.gen_bool(0.5) { 0.0 } else { std::f64::consts::PI };
        ActionSpec {
            category_id,
            program,
            speed,
            direction,
            limb_phase: rng.gen_range(0.0..1.0),
            cyclic: program.is_cyclic(),
            character_variant: rng.gen_range(0..NUM_VARIANTS),
        }
    }

    pub fn character(&self) -> Character {
        Character::from_variant(self.character_variant)
    }

    /// Rendered travel velocity in px/frame, mirroring included.
    pub fn velocity(&self) -> (f64, f64) {
        let v = self.speed * self.program.base_velocity();
        let sx = if self.character().mirrored { -1.0 } else { 1.0 };
        (sx * v * self.direction.cos(), v * self.direction.sin())
    }

    /// `key=value` fields separated by spaces.
    pub fn to_text(&self) -> String {
        format!(
            "program={} category={} speed={:?} direction={:?} phase={:?} cyclic={} variant={}",
            self.program,
            self.category_id,
            self.speed,
            self.direction,
            self.limb_phase,
            u8::from(self.cyclic),
            self.character_variant
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut program = None;
        let mut category = None;
        let mut speed = None;
        let mut direction = None;
        let mut phase = None;
        let mut cyclic = None;
        let mut variant = None;
        for field in text.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("spec field '{field}' is not key=value")))?;
            let bad = || Error::arg(format!("bad value in spec field '{field}'"));
            match k {
                "program" => program = Some(v.parse::<MotionProgram>()?),
                "category" => category = Some(v.parse::<usize>().map_err(|_| bad())?),
                "speed" => speed = Some(v.parse::<f64>().map_err(|_| bad())?),
                "direction" => direction = Some(v.parse::<f64>().map_err(|_| bad())?),
                "phase" => phase = Some(v.parse::<f64>().map_err(|_| bad())?),
                "cyclic" => cyclic = Some(v == "1"),
                "variant" => variant = Some(v.parse::<usize>().map_err(|_| bad())?),
                _ => return Err(Error::arg(format!("unknown spec field '{k}'"))),
            }
        }
        let missing = |name: &str| Error::arg(format!("spec is missing '{name}'"));
        Ok(ActionSpec {
            program: program.ok_or_else(|| missing("program"))?,
            category_id: category.ok_or_else(|| missing("category"))?,
            speed: speed.ok_or_else(|| missing("speed"))?,
            direction: direction.ok_or_else(|| missing("direction"))?,
            limb_phase: phase.ok_or_else(|| missing("phase"))?,
            cyclic: cyclic.ok_or_else(|| missing("cyclic"))?,
            character_variant: variant.ok_or_else(|| missing("variant"))?,
        })
    }
}

pub const H1_NAMES: [&str; NUM_H1] = [
    "horizontal body translation",
    "vertical body translation",
    "moves toward image right",
    "moves toward image left",
    "torso lean",
    "body turn",
    "one arm raised",
    "both arms raised",
    "one arm swings",
    "both arms swing",
    "one leg swings",
    "both legs swing",
    "knees bend",
    "elbow flexes",
    "mirror-symmetric limb motion",
    "alternating limbs",
    "leg raised high",
    "arm held horizontal",
    "hands meet",
];

pub const H2_NAMES: [&str; NUM_H2] = [
    "fast",
    "cyclic",
    "ballistic arc",
    "ground contact change",
    "locomotion",
    "stationary base",
    "upper body only",
    "lower body dominant",
    "whole body",
    "lowered posture",
    "rotation",
    "single gesture",
    "vertical-dominant motion",
    "horizontal-dominant motion",
];

/// Low-level (body part) and high-level (global) attribute bits of a spec.
pub fn attributes(spec: &ActionSpec) -> ([bool; NUM_H1], [bool; NUM_H2]) {
    use MotionProgram::*;
    let p = spec.program;
    let is = |set: &[MotionProgram]| set.contains(&p);
    let (vx, vy) = spec.velocity();
    let speed = vx.hypot(vy);
    // a travel direction counts when it carries at least ~38% of the speed
    let horizontal = p.translates() && vx.abs() > 0.38 * speed;
    let vertical_travel = p.translates() && vy.abs() > 0.38 * speed;

    let h1 = [
        horizontal,
        vertical_travel || is(&[Jump, JumpingJacks, Squat]),
        horizontal && vx > 0.0,
        horizontal && vx < 0.0,
        is(&[CrouchWalk, Bow]),
        is(&[Spin]),
        is(&[Wave]),
        is(&[Jump, JumpingJacks]),
        is(&[Wave]),
        is(&[Walk, Run, CrouchWalk, Clap, JumpingJacks]),
        is(&[Kick]),
        is(&[Walk, Run, CrouchWalk, JumpingJacks, Squat]),
        is(&[CrouchWalk, Squat, Jump, Run]),
        is(&[Wave, Clap, Run]),
        is(&[Clap, JumpingJacks, Squat, Jump]),
        is(&[Walk, Run, CrouchWalk]),
        is(&[Kick]),
        is(&[Point, Spin]),
        is(&[Clap]),
    ];
    let h2 = [
        spec.speed >= FAST_SPEED,
        spec.cyclic,
        is(&[Jump]),
        is(&[Jump, JumpingJacks, Run]),
        p.translates(),
        is(&[Wave, Kick, Spin, Clap, Point, Squat, Bow]),
        is(&[Wave, Clap, Point, Bow]),
        is(&[Kick, Squat]),
        is(&[Walk, Run, CrouchWalk, Jump, JumpingJacks, Spin]),
        is(&[Squat, CrouchWalk, Bow, Jump]),
        is(&[Spin, Bow]),
        !spec.cyclic,
        is(&[Jump, Squat, JumpingJacks, Bow]),
        is(&[Walk, Run, CrouchWalk, Clap, Spin]),
    ];
    (h1, h2)
}
