//! Procedural ground-truth maps.

use rand::seq::SliceRandom;
use rand::Rng;

use super::belief::reachable_free_cells;
use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid};
use crate::rng;

const MAX_OBSTACLE_PROPOSALS: usize = 20_000;

pub(crate) fn cells_per_side(side: f64, resolution: f64) -> Result<usize> {
    if !(side > 0.0 && resolution > 0.0) {
        return Err(Error::config("side and resolution must be positive"));
    }
    let n = side / resolution;
    if (n - n.round()).abs() > 1e-9 || n.round() < 3.0 {
        return Err(Error::config(format!(
            "side {side} m at {resolution} m/cell does not give an integer grid of at least 3 cells"
        )));
    }
    Ok(n.round() as usize)
}

fn with_border(n: usize, resolution: f64) -> Result<OccupancyGrid> {
    let mut g = OccupancyGrid::new(n, n, resolution, CellState::Free)?;
    for k in 0..n {
        g.set_cell(k, 0, CellState::Obstacle);
        g.set_cell(k, n - 1, CellState::Obstacle);
        g.set_cell(0, k, CellState::Obstacle);
        g.set_cell(n - 1, k, CellState::Obstacle);
    }
    Ok(g)
}

/// Perfect maze with one-cell walls. See [`generate_maze_with_walls`].
pub fn generate_maze(seed: u64, side: f64, resolution: f64, corridor_width: usize) -> Result<OccupancyGrid> {
    generate_maze_with_walls(seed, side, resolution, corridor_width, 1, 0.0)
}

/// Perfect maze carved by a recursive backtracker on a coarse lattice.
///
/// The interior is split into `m x m` rooms separated by wall bands
/// `wall_thickness` cells thick, where `m` is the largest count that keeps
/// every room at least `corridor_width` cells wide. Leftover cells widen the
/// rooms evenly. An opening removes the whole shared wall segment between two
/// rooms, leaving the pillars at band crossings.
///
/// After carving, each remaining shared wall between adjacent rooms is
/// opened with probability `loop_fraction`, which adds cycles. Zero keeps the
/// maze perfect.
pub fn generate_maze_with_walls(
    seed: u64,
    side: f64,
    resolution: f64,
    corridor_width: usize,
    wall_thickness: usize,
    loop_fraction: f64,
) -> Result<OccupancyGrid> {
    let n = cells_per_side(side, resolution)?;
    if corridor_width < 2 {
        return Err(Error::config(format!("corridor width must be at least 2 cells, got {corridor_width}")));
    }
    if wall_thickness == 0 {
        return Err(Error::config("maze wall thickness must be at least 1 cell"));
    }
    if !(0.0..=1.0).contains(&loop_fraction) {
        return Err(Error::config(format!("maze loop fraction must lie in [0, 1], got {loop_fraction}")));
    }
    let interior = n - 2;
    let m = ((interior + wall_thickness) / (corridor_width + wall_thickness)).max(1);
    let mut g = with_border(n, resolution)?;
    if m == 1 {
        return Ok(g);
    }
    let leftover = interior - m * corridor_width - (m - 1) * wall_thickness;
    // spans[k] = first and one-past-last cell of room k along either axis
    let mut spans = Vec::with_capacity(m);
    let mut start = 1;
    for k in 0..m {
        let width = corridor_width + (k + 1) * leftover / m - k * leftover / m;
        spans.push((start, start + width));
        start += width + wall_thickness;
    }
    for pair in spans.windows(2) {
        for w in pair[0].1..pair[1].0 {
            for k in 0..n {
                g.set_cell(w, k, CellState::Obstacle);
                g.set_cell(k, w, CellState::Obstacle);
            }
        }
    }

    let mut rng = rng::stream(seed, "maze", 0);
    let room = |cx: usize, cy: usize| cy * m + cx;
    // open[r][0]: wall to the +x neighbour is gone; open[r][1]: to the +y one
    let mut open = vec![[false; 2]; m * m];
    let mut visited = vec![false; m * m];
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    while let Some(&(cx, cy)) = stack.last() {
        let mut options: Vec<(usize, usize)> = Vec::with_capacity(4);
        if cx > 0 {
            options.push((cx - 1, cy));
        }
        if cx + 1 < m {
            options.push((cx + 1, cy));
        }
        if cy > 0 {
            options.push((cx, cy - 1));
        }
        if cy + 1 < m {
            options.push((cx, cy + 1));
        }
        options.retain(|&(x, y)| !visited[room(x, y)]);
        let Some(&(nx, ny)) = options.choose(&mut rng) else {
            stack.pop();
            continue;
        };
        let axis = usize::from(nx == cx);
        open[room(cx.min(nx), cy.min(ny))][axis] = true;
        visited[room(nx, ny)] = true;
        stack.push((nx, ny));
    }
    if loop_fraction > 0.0 {
        for cy in 0..m {
            for cx in 0..m {
                for axis in 0..2 {
                    let inside = if axis == 0 { cx + 1 < m } else { cy + 1 < m };
                    if inside && !open[room(cx, cy)][axis] && rng.gen_bool(loop_fraction) {
                        open[room(cx, cy)][axis] = true;
                    }
                }
            }
        }
    }
    for cy in 0..m {
        for cx in 0..m {
            if open[room(cx, cy)][0] {
                for x in spans[cx].1..spans[cx + 1].0 {
                    for y in spans[cy].0..spans[cy].1 {
                        g.set_cell(x, y, CellState::Free);
                    }
                }
            }
            if open[room(cx, cy)][1] {
                for y in spans[cy].1..spans[cy + 1].0 {
                    for x in spans[cx].0..spans[cx].1 {
                        g.set_cell(x, y, CellState::Free);
                    }
                }
            }
        }
    }
    Ok(g)
}

fn free_space_connected(g: &OccupancyGrid) -> bool {
    let free = g.count(CellState::Free);
    match (0..g.len()).find(|&i| g.get(i) == CellState::Free) {
        None => true,
        Some(start) => reachable_free_cells(g, start).map(|r| r.len() == free).unwrap_or(false),
    }
}

/// Scattered rectangles and discs inside a bordered room.
///
/// Shapes are proposed one at a time; a shape that would split the free space
/// is rejected and another is drawn, until the interior obstacle fraction
/// reaches `density`.
pub fn generate_random_obstacles(seed: u64, side: f64, resolution: f64, density: f64) -> Result<OccupancyGrid> {
    let n = cells_per_side(side, resolution)?;
    if !(0.0..0.5).contains(&density) {
        return Err(Error::config(format!("obstacle density must be in [0, 0.5), got {density}")));
    }
    let mut g = with_border(n, resolution)?;
    let interior = (n - 2) * (n - 2);
    let target = (density * interior as f64).ceil() as usize;
    let mut placed = 0usize;
    let mut rng = rng::stream(seed, "obstacles", 0);
    let cells_of = |meters: f64| ((meters / resolution).round() as i64).max(1);

    let mut proposals = 0;
    while placed < target {
        proposals += 1;
        if proposals > MAX_OBSTACLE_PROPOSALS {
            return Err(Error::Generation(format!(
                "reached {placed} of {target} obstacle cells before exhausting proposals"
            )));
        }
        let cx = rng.gen_range(1..(n - 1) as i64);
        let cy = rng.gen_range(1..(n - 1) as i64);
        let mut shape = Vec::new();
        if rng.gen_bool(0.5) {
            let hw = cells_of(rng.gen_range(1.0..4.0));
            let hh = cells_of(rng.gen_range(1.0..4.0));
            for y in cy - hh..=cy + hh {
                for x in cx - hw..=cx + hw {
                    shape.push((x, y));
                }
            }
        } else {
            let r = cells_of(rng.gen_range(1.0..4.0));
            for y in cy - r..=cy + r {
                for x in cx - r..=cx + r {
                    if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                        shape.push((x, y));
                    }
                }
            }
        }
        let added: Vec<usize> = shape
            .into_iter()
            .filter(|&(x, y)| x >= 1 && y >= 1 && x < (n - 1) as i64 && y < (n - 1) as i64)
            .map(|(x, y)| g.index(x as usize, y as usize))
            .filter(|&i| g.get(i) == CellState::Free)
            .collect();
        if added.is_empty() {
            continue;
        }
        for &i in &added {
            g.set(i, CellState::Obstacle);
        }
        if free_space_connected(&g) {
            placed += added.len();
        } else {
            for &i in &added {
                g.set(i, CellState::Free);
            }
        }
    }
    Ok(g)
}
