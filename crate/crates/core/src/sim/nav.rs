//! Grid path following that turns a far exploration goal into a near waypoint
//! the local DWA controller can reach.
//!
//! Paths come from an 8-connected A* over the navigation belief with integer
//! move costs. Unknown cells are traversable at a small surcharge and cells
//! close to known obstacles are discouraged. The waypoint is the farthest
//! path cell within the lookahead that is in line of sight.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid, Point};
use crate::world::segment_is_clear;

const STRAIGHT: u32 = 10;
const DIAGONAL: u32 = 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    /// Maximum waypoint distance in meters.
    pub lookahead: f64,
    /// Extra cost for entering an unknown cell.
    pub unknown_cost: u32,
    /// Extra cost for cells 1, 2 and 3 cells (Chebyshev) away from an obstacle.
    pub wall_costs: [u32; 3],
    /// An agent this close to its goal counts as arrived.
    pub arrival_radius: f64,
    /// Plan a fresh goal on arrival instead of holding until the next decision.
    pub replan_on_arrival: bool,
    /// A cached path is reused for at most this many waypoint queries.
    pub path_reuse: usize,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self { lookahead: 10.0, unknown_cost: 4, wall_costs: [40, 12, 3], arrival_radius: 1.5, replan_on_arrival: true, path_reuse: 5 }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lookahead > 0.0 && self.lookahead.is_finite()) {
            return Err(Error::config("nav.lookahead must be positive"));
        }
        if self.path_reuse == 0 {
            return Err(Error::config("nav.path_reuse must be at least 1"));
        }
        if !(self.arrival_radius >= 0.0 && self.arrival_radius.is_finite()) {
            return Err(Error::config("nav.arrival_radius must be non-negative"));
        }
        Ok(())
    }
}

/// Scratch buffers reused across queries, plus the last planned path.
#[derive(Debug, Default)]
pub struct Navigator {
    path: Vec<usize>,
    path_goal: usize,
    path_uses: usize,
    wall_dist: Vec<u8>,
    cost: Vec<u32>,
    parent: Vec<u32>,
    closed: Vec<bool>,
    heap: BinaryHeap<Reverse<(u32, u32, u32)>>,
    queue: VecDeque<usize>,
}

fn octile(a: (usize, usize), b: (usize, usize)) -> u32 {
    let dx = a.0.abs_diff(b.0) as u32;
    let dy = a.1.abs_diff(b.1) as u32;
    STRAIGHT * dx.max(dy) + (DIAGONAL - STRAIGHT) * dx.min(dy)
}

impl Navigator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Chebyshev distance to the nearest obstacle, saturated at 4.
    fn compute_wall_distance(&mut self, map: &OccupancyGrid) {
        self.wall_dist.clear();
        self.wall_dist.resize(map.len(), 4);
        self.queue.clear();
        for i in 0..map.len() {
            if map.get(i) == CellState::Obstacle {
                self.wall_dist[i] = 0;
                self.queue.push_back(i);
            }
        }
        while let Some(c) = self.queue.pop_front() {
            let d = self.wall_dist[c] + 1;
            if d >= 4 {
                continue;
            }
            for n in map.neighbors8(c) {
                if self.wall_dist[n] > d {
                    self.wall_dist[n] = d;
                    self.queue.push_back(n);
                }
            }
        }
    }

    fn step_cost(&self, map: &OccupancyGrid, cfg: &NavConfig, cell: usize) -> u32 {
        let wall = match self.wall_dist[cell] {
            1 => cfg.wall_costs[0],
            2 => cfg.wall_costs[1],
            3 => cfg.wall_costs[2],
            _ => 0,
        };
        let unknown = if map.get(cell) == CellState::Unknown { cfg.unknown_cost } else { 0 };
        wall + unknown
    }

    /// Cell path from `start` toward `goal`, start first. When the goal cannot
    /// be reached the path ends at the reached cell closest to it.
    pub fn plan_path(&mut self, map: &OccupancyGrid, cfg: &NavConfig, start: usize, goal: usize) -> Vec<usize> {
        self.compute_wall_distance(map);
        let n = map.len();
        self.cost.clear();
        self.cost.resize(n, u32::MAX);
        self.parent.clear();
        self.parent.resize(n, u32::MAX);
        self.closed.clear();
        self.closed.resize(n, false);
        self.heap.clear();

        let goal_xy = map.coords(goal);
        let h = |c: usize| octile(map.coords(c), goal_xy);
        self.cost[start] = 0;
        self.heap.push(Reverse((h(start), h(start), start as u32)));
        let mut best = (h(start), start);

        while let Some(Reverse((_, hc, c))) = self.heap.pop() {
            let c = c as usize;
            if self.closed[c] {
                continue;
            }
            self.closed[c] = true;
            if (hc, c) < best {
                best = (hc, c);
            }
            if c == goal {
                break;
            }
            let (cx, cy) = map.coords(c);
            for nb in map.neighbors8(c) {
                if self.closed[nb] || map.get(nb) == CellState::Obstacle {
                    continue;
                }
                let (nx, ny) = map.coords(nb);
                let diagonal = nx != cx && ny != cy;
                if diagonal
                    && (map.cell(nx, cy) == CellState::Obstacle || map.cell(cx, ny) == CellState::Obstacle)
                {
                    continue;
                }
                let g = self.cost[c] + if diagonal { DIAGONAL } else { STRAIGHT } + self.step_cost(map, cfg, nb);
                if g < self.cost[nb] {
                    self.cost[nb] = g;
                    self.parent[nb] = c as u32;
                    let hn = h(nb);
                    self.heap.push(Reverse((g + hn, hn, nb as u32)));
                }
            }
        }

        let end = if self.closed[goal] { goal } else { best.1 };
        let mut path = vec![end];
        let mut c = end;
        while c != start {
            c = self.parent[c] as usize;
            path.push(c);
        }
        path.reverse();
        path
    }

    /// Near target for the local controller on the way from `pos` to `goal`.
    ///
    /// The path is re-planned when the goal cell changes, after
    /// `path_reuse` queries, or when `pos` has left the path.
    pub fn waypoint(&mut self, map: &OccupancyGrid, cfg: &NavConfig, pos: Point, goal: Point) -> Result<Point> {
        let start = map
            .cell_of(pos)
            .ok_or_else(|| Error::domain(format!("navigation start ({}, {}) outside the grid", pos.x, pos.y)))?;
        let goal_cell = map
            .cell_of(goal)
            .ok_or_else(|| Error::domain(format!("navigation goal ({}, {}) outside the grid", goal.x, goal.y)))?;
        if start == goal_cell {
            self.path.clear();
            return Ok(goal);
        }
        // Closest path cell among those touching the start cell.
        let (sx, sy) = map.coords(start);
        let on_path = self.path.iter().rposition(|&c| {
            let (cx, cy) = map.coords(c);
            cx.abs_diff(sx) <= 1 && cy.abs_diff(sy) <= 1
        });
        let stale = self.path.is_empty() || self.path_goal != goal_cell || self.path_uses >= cfg.path_reuse;
        let from = match on_path {
            Some(k) if !stale && self.path[k..].iter().all(|&c| map.get(c) != CellState::Obstacle) => {
                self.path_uses += 1;
                k
            }
            _ => {
                self.path = self.plan_path(map, cfg, start, goal_cell);
                self.path_goal = goal_cell;
                self.path_uses = 1;
                0
            }
        };
        let path = &self.path[from..];
        let last = *path.last().expect("path holds the start");
        if last == goal_cell && pos.distance(goal) <= cfg.lookahead && segment_is_clear(map, pos, goal) {
            return Ok(goal);
        }
        for &c in path.iter().skip(1).rev() {
            let p = map.cell_center(c);
            if pos.distance(p) <= cfg.lookahead && segment_is_clear(map, pos, p) {
                return Ok(p);
            }
        }
        Ok(path.get(1).map_or(goal, |&c| map.cell_center(c)))
    }
}
