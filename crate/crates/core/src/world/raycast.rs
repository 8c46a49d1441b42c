//! Grid traversal and the lidar beam model.
//!
//! Traversal is an Amanatides-Woo walk extended to a supercover: when a ray
//! passes exactly through a cell corner, both edge-adjacent cells are visited
//! before the diagonal one, so nothing leaks diagonally past an obstacle corner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid, Point};

/// Cells touched by one lidar sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub width: usize,
    pub height: usize,
    /// Sorted, deduplicated.
    pub freed_cells: Vec<usize>,
    /// Sorted, deduplicated.
    pub obstacle_cells: Vec<usize>,
    pub hit_points: Vec<Point>,
}

impl ScanResult {
    pub fn empty_for(grid: &OccupancyGrid) -> Self {
        Self { width: grid.width(), height: grid.height(), ..Default::default() }
    }

    /// All observed cells (freed and obstacle), sorted.
    pub fn observed_cells(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.freed_cells.iter().chain(&self.obstacle_cells).copied().collect();
        all.sort_unstable();
        all
    }
}

/// Walk the cells crossed by the ray `origin + t * dir` for `0 <= t < max_t`.
///
/// `dir` must be a unit vector for `t` to be in meters. `visit` receives each
/// cell with the ray parameter at which it is entered and returns `false` to
/// stop. The origin cell is visited first with `t = 0`. Nothing is visited if
/// the origin lies outside the grid.
pub fn traverse_ray(
    grid: &OccupancyGrid,
    origin: Point,
    dir: (f64, f64),
    max_t: f64,
    mut visit: impl FnMut(usize, f64) -> bool,
) {
    let Some(start) = grid.cell_of(origin) else {
        return;
    };
    if !visit(start, 0.0) {
        return;
    }
    let res = grid.resolution();
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let (c0, r0) = grid.coords(start);
    let (mut col, mut row) = (c0 as i64, r0 as i64);
    let (dx, dy) = dir;

    let axis = |pos: f64, cell: i64, d: f64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, ((cell + 1) as f64 * res - pos) / d, res / d)
        } else if d < 0.0 {
            (-1, (cell as f64 * res - pos) / d, -res / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (step_x, mut t_max_x, t_delta_x) = axis(origin.x, col, dx);
    let (step_y, mut t_max_y, t_delta_y) = axis(origin.y, row, dy);
    let inside = |c: i64, r: i64| c >= 0 && r >= 0 && c < w && r < h;
    let idx = |c: i64, r: i64| (r * w + c) as usize;

    loop {
        let t = t_max_x.min(t_max_y);
        if !(t < max_t) {
            return;
        }
        if t_max_x < t_max_y {
            col += step_x;
            t_max_x += t_delta_x;
        } else if t_max_y < t_max_x {
            row += step_y;
            t_max_y += t_delta_y;
        } else {
            // Exact corner crossing: visit both edge neighbours first.
            for (c, r) in [(col + step_x, row), (col, row + step_y)] {
                if inside(c, r) && !visit(idx(c, r), t) {
                    return;
                }
            }
            col += step_x;
            row += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        }
        if !inside(col, row) || !visit(idx(col, row), t) {
            return;
        }
    }
}

/// Cells on the supercover of segment `a -> b`, in traversal order.
pub fn segment_cells(grid: &OccupancyGrid, a: Point, b: Point) -> Vec<usize> {
    let mut out = Vec::new();
    let len = a.distance(b);
    let dir = if len > 0.0 { ((b.x - a.x) / len, (b.y - a.y) / len) } else { (0.0, 0.0) };
    traverse_ray(grid, a, dir, len, |c, _| {
        out.push(c);
        true
    });
    out
}

/// True when no cell on the supercover of `a -> b` is an obstacle.
pub fn segment_is_clear(grid: &OccupancyGrid, a: Point, b: Point) -> bool {
    let len = a.distance(b);
    let dir = if len > 0.0 { ((b.x - a.x) / len, (b.y - a.y) / len) } else { (0.0, 0.0) };
    let mut clear = true;
    traverse_ray(grid, a, dir, len, |c, _| {
        clear = grid.get(c) != CellState::Obstacle;
        clear
    });
    clear
}

/// Simulated 2D lidar against the ground truth.
///
/// Casts `ceil(2*pi / angular_resolution)` evenly spaced beams starting at
/// `heading`. Each beam frees the cells it crosses until it enters an obstacle
/// cell (recorded, with its hit point) or runs out of range.
pub fn raycast_scan(
    truth: &OccupancyGrid,
    pose: Point,
    heading: f64,
    range: f64,
    angular_resolution: f64,
) -> Result<ScanResult> {
    let Some(own) = truth.cell_of(pose) else {
        return Err(Error::domain(format!("scan pose ({}, {}) outside the grid", pose.x, pose.y)));
    };
    if !(range >= 0.0) || !(angular_resolution > 0.0) {
        return Err(Error::domain("scan range must be non-negative and angular resolution positive"));
    }
    let beams = (std::f64::consts::TAU / angular_resolution).ceil() as usize;
    let spacing = std::f64::consts::TAU / beams as f64;

    let mut freed = Vec::new();
    let mut obstacles = Vec::new();
    let mut hits = Vec::new();
    match truth.get(own) {
        CellState::Obstacle => obstacles.push(own),
        _ => freed.push(own),
    }
    for k in 0..beams {
        let angle = heading + k as f64 * spacing;
        let dir = (angle.cos(), angle.sin());
        traverse_ray(truth, pose, dir, range, |cell, t| {
            if cell == own {
                return true;
            }
            if truth.get(cell) == CellState::Obstacle {
                obstacles.push(cell);
                hits.push(Point::new(pose.x + t * dir.0, pose.y + t * dir.1));
                false
            } else {
                freed.push(cell);
                true
            }
        });
    }
    freed.sort_unstable();
    freed.dedup();
    obstacles.sort_unstable();
    obstacles.dedup();
    Ok(ScanResult {
        width: truth.width(),
        height: truth.height(),
        freed_cells: freed,
        obstacle_cells: obstacles,
        hit_points: hits,
    })
}
