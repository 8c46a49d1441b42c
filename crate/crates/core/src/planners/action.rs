//! Bi-level goal codec: a patch index on an 8x8 partition of the map plus a
//! continuous offset inside the patch.
//!
//! Patch `g` spans column `g / 8` along `x` and row `g % 8` along `y`. The
//! offset `(x, y)` in `[-1, 1]^2` maps the patch's lower-left corner to `-1`
//! and its upper-right corner to `1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Point;

pub const PATCHES_PER_SIDE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub patches_per_side: usize,
    /// Patch width in meters.
    pub patch_width: f64,
    /// Patch height in meters.
    pub patch_height: f64,
}

impl PatchGrid {
    pub fn for_map(width_m: f64, height_m: f64) -> Self {
        let n = PATCHES_PER_SIDE as f64;
        Self { patches_per_side: PATCHES_PER_SIDE, patch_width: width_m / n, patch_height: height_m / n }
    }

    pub fn patch_count(&self) -> usize {
        self.patches_per_side * self.patches_per_side
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiLevelAction {
    pub g: usize,
    pub x: f64,
    pub y: f64,
}

impl BiLevelAction {
    pub fn validate(&self, pg: &PatchGrid) -> Result<()> {
        if self.g >= pg.patch_count() || !(-1.0..=1.0).contains(&self.x) || !(-1.0..=1.0).contains(&self.y) {
            return Err(Error::domain(format!("action {self:?} out of bounds")));
        }
        Ok(())
    }
}

/// `x_g = (2 floor(g/8) + 1 + x) L_w / 2`, `y_g = (2 (g mod 8) + 1 + y) L_h / 2`.
pub fn decode_goal(a: BiLevelAction, pg: &PatchGrid) -> Point {
    let n = pg.patches_per_side;
    let col = (a.g / n) as f64;
    let row = (a.g % n) as f64;
    Point::new((2.0 * col + 1.0 + a.x) * pg.patch_width / 2.0, (2.0 * row + 1.0 + a.y) * pg.patch_height / 2.0)
}

/// Patch index along one axis; points on an interior boundary go to the lower patch.
fn axis_patch(v: f64, size: f64, n: usize) -> usize {
    ((v / size).ceil() as usize).saturating_sub(1).min(n - 1)
}

/// Offset along one axis whose decode reproduces `v` exactly when such an
/// offset exists; otherwise the closest one found.
fn axis_offset(v: f64, patch: usize, size: f64) -> f64 {
    let base = 2.0 * patch as f64 + 1.0;
    let decode = |x: f64| (base + x) * size / 2.0;
    let mut x = (2.0 * v / size - base).clamp(-1.0, 1.0);
    let mut best = (x, (decode(x) - v).abs());
    for _ in 0..64 {
        let d = decode(x);
        if d == v {
            return x;
        }
        x = if d < v { next_up(x) } else { next_down(x) };
        if !(-1.0..=1.0).contains(&x) {
            break;
        }
        let err = (decode(x) - v).abs();
        if err < best.1 {
            best = (x, err);
        }
    }
    best.0
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// Inverse of [`decode_goal`] over the closed map extent.
pub fn encode_goal(p: Point, pg: &PatchGrid) -> Result<BiLevelAction> {
    let n = pg.patches_per_side;
    let (w, h) = (pg.patch_width * n as f64, pg.patch_height * n as f64);
    if !(p.x >= 0.0 && p.y >= 0.0 && p.x <= w && p.y <= h) {
        return Err(Error::domain(format!("goal ({}, {}) outside the map", p.x, p.y)));
    }
    let col = axis_patch(p.x, pg.patch_width, n);
    let row = axis_patch(p.y, pg.patch_height, n);
    Ok(BiLevelAction {
        g: col * n + row,
        x: axis_offset(p.x, col, pg.patch_width),
        y: axis_offset(p.y, row, pg.patch_height),
    })
}

/// The decode-representable point closest to `p`: `decode(encode(p))`.
/// Goals are canonicalised through this so logged goals round-trip exactly.
pub fn canonical_goal(p: Point, pg: &PatchGrid) -> Result<Point> {
    Ok(decode_goal(encode_goal(p, pg)?, pg))
}
