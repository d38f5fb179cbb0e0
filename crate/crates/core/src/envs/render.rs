//! Grayscale rasterisation of task glyphs plus the visual distractors.
//!
//! World coordinates span `[-1, 1]^2` with `y` pointing up; row 0 is the top
//! of the frame.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_FRAME_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distractor {
    BrightnessShift,
    LightGradient,
    ObjectRecolor,
    ClutterBlob,
}

impl Distractor {
    pub const ALL: [Distractor; 4] = [
        Distractor::BrightnessShift,
        Distractor::LightGradient,
        Distractor::ObjectRecolor,
        Distractor::ClutterBlob,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Distractor::BrightnessShift => "brightness_shift",
            Distractor::LightGradient => "light_gradient",
            Distractor::ObjectRecolor => "object_recolor",
            Distractor::ClutterBlob => "clutter_blob",
        }
    }
}

impl fmt::Display for Distractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distractor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distractor::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown distractor '{s}'")))
    }
}

/// Magnitude ranges for the per-episode distractor draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistractorRanges {
    /// Additive shift drawn from `[-b, b]`.
    pub brightness: f64,
    /// Peak-to-centre amplitude of the linear light ramp, drawn from `[0, g]`.
    pub gradient: f64,
    /// Glyph intensities are multiplied by a factor in `[recolor_min, 1]`.
    pub recolor_min: f64,
    /// Clutter disc radius range in pixels.
    pub clutter_radius: (f64, f64),
}

impl Default for DistractorRanges {
    fn default() -> Self {
        DistractorRanges {
            brightness: 0.3,
            gradient: 0.4,
            recolor_min: 0.4,
            clutter_radius: (2.0, 5.0),
        }
    }
}

/// One episode's distractor parameters. All fields are drawn on every reset
/// whether or not the corresponding distractor is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct DistractorDraw {
    pub brightness: f64,
    pub gradient_angle: f64,
    pub gradient_amplitude: f64,
    pub agent_tint: f64,
    pub goal_tint: f64,
    /// Blob centre in world coordinates.
    pub clutter_center: (f64, f64),
    pub clutter_radius: f64,
    pub clutter_intensity: f64,
}

impl Default for DistractorDraw {
    fn default() -> Self {
        DistractorDraw {
            brightness: 0.0,
            gradient_angle: 0.0,
            gradient_amplitude: 0.0,
            agent_tint: 1.0,
            goal_tint: 1.0,
            clutter_center: (0.0, 0.0),
            clutter_radius: 0.0,
            clutter_intensity: 0.0,
        }
    }
}

impl DistractorDraw {
    pub fn sample<R: Rng + ?Sized>(ranges: &DistractorRanges, rng: &mut R) -> Self {
        let mut uniform = |lo: f64, hi: f64| if hi > lo { rng.random_range(lo..hi) } else { lo };
        DistractorDraw {
            brightness: uniform(-ranges.brightness, ranges.brightness),
            gradient_angle: uniform(0.0, std::f64::consts::TAU),
            gradient_amplitude: uniform(0.0, ranges.gradient),
            agent_tint: uniform(ranges.recolor_min, 1.0),
            goal_tint: uniform(ranges.recolor_min, 1.0),
            clutter_center: (uniform(-0.9, 0.9), uniform(-0.9, 0.9)),
            clutter_radius: uniform(ranges.clutter_radius.0, ranges.clutter_radius.1),
            clutter_intensity: uniform(0.3, 0.9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlyphRole {
    Agent,
    Goal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Glyph {
    pub x: f64,
    pub y: f64,
    pub radius_px: f64,
    pub intensity: f64,
    pub role: GlyphRole,
}

/// World coordinates to continuous pixel coordinates `(col, row)`.
pub fn world_to_pixel(x: f64, y: f64, size: usize) -> (f64, f64) {
    let n = size as f64;
    ((x + 1.0) * 0.5 * n, (1.0 - y) * 0.5 * n)
}

/// Pixel-index bounding box `(row_lo, row_hi, col_lo, col_hi)`, inclusive,
/// of a disc drawn by [`draw_disc`].
pub fn disc_bbox(cx: f64, cy: f64, radius: f64, size: usize) -> (usize, usize, usize, usize) {
    let reach = radius + 0.5;
    let clampi = |v: f64| v.max(0.0).min(size as f64 - 1.0) as usize;
    (
        clampi((cy - reach - 0.5).floor()),
        clampi((cy + reach - 0.5).ceil()),
        clampi((cx - reach - 0.5).floor()),
        clampi((cx + reach - 0.5).ceil()),
    )
}

/// Max-composites an anti-aliased disc (linear coverage ramp one pixel wide),
/// shaded so that it peaks at its centre.
pub fn draw_disc(frame: &mut [f64], size: usize, cx: f64, cy: f64, radius: f64, intensity: f64) {
    let (r0, r1, c0, c1) = disc_bbox(cx, cy, radius, size);
    let reach = radius + 0.5;
    for r in r0..=r1 {
        for c in c0..=c1 {
            let dx = c as f64 + 0.5 - cx;
            let dy = r as f64 + 0.5 - cy;
            let d = (dx * dx + dy * dy).sqrt();
            let coverage = (reach - d).clamp(0.0, 1.0);
            let shade = 1.0 - 0.5 * (d / reach).powi(2);
            let v = coverage * shade * intensity;
            let p = &mut frame[r * size + c];
            if v > *p {
                *p = v;
            }
        }
    }
}

pub fn render(glyphs: &[Glyph], size: usize, modes: &BTreeSet<Distractor>, draw: &DistractorDraw) -> Vec<f64> {
    let mut frame = vec![0.0; size * size];
    let scale = size as f64 / DEFAULT_FRAME_SIZE as f64;
    let recolor = modes.contains(&Distractor::ObjectRecolor);
    for g in glyphs {
        let tint = match (recolor, g.role) {
            (false, _) => 1.0,
            (true, GlyphRole::Agent) => draw.agent_tint,
            (true, GlyphRole::Goal) => draw.goal_tint,
        };
        let (cx, cy) = world_to_pixel(g.x, g.y, size);
        draw_disc(&mut frame, size, cx, cy, g.radius_px * scale, g.intensity * tint);
    }
    if modes.contains(&Distractor::ClutterBlob) {
        let (cx, cy) = world_to_pixel(draw.clutter_center.0, draw.clutter_center.1, size);
        draw_disc(&mut frame, size, cx, cy, draw.clutter_radius * scale, draw.clutter_intensity);
    }
    if modes.contains(&Distractor::LightGradient) {
        let (s, c) = draw.gradient_angle.sin_cos();
        let n = size as f64;
        for r in 0..size {
            for col in 0..size {
                let u = 2.0 * (col as f64 + 0.5) / n - 1.0;
                let v = 1.0 - 2.0 * (r as f64 + 0.5) / n;
                frame[r * size + col] += draw.gradient_amplitude * (c * u + s * v);
            }
        }
    }
    if modes.contains(&Distractor::BrightnessShift) {
        for p in frame.iter_mut() {
            *p += draw.brightness;
        }
    }
    for p in frame.iter_mut() {
        *p = p.clamp(0.0, 1.0);
    }
    frame
}
