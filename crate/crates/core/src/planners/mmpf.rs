//! Multi-agent potential field exploration.
//!
//! Frontier cells are clustered into groups. Each group pulls with strength
//! proportional to its size and inversely proportional to the BFS distance
//! from its centroid; each teammate pushes with inverse BFS distance. The
//! agent then descends the field from its own cell until it reaches a frontier
//! or a local minimum, and that cell becomes the goal.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{PlanOutcome, PlannerContext};
use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid, Point};
use crate::world::{detect_frontiers, FrontierConnectivity};

/// Distance value of cells a BFS never reached.
pub const UNREACHED: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmpfConfig {
    /// Attraction weight per frontier cell of a group.
    pub attraction: f64,
    /// Repulsion weight per teammate.
    pub repulsion: f64,
    /// Chebyshev linkage radius for frontier clustering, in cells.
    pub linkage_radius: usize,
    /// When the descent stalls short of a frontier, aim for the centroid of
    /// the group with the strongest pull on the stall cell instead.
    pub escape_local_minima: bool,
}

impl Default for MmpfConfig {
    fn default() -> Self {
        Self { attraction: 1.0, repulsion: 25.0, linkage_radius: 2, escape_local_minima: true }
    }
}

impl MmpfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.attraction >= 0.0) || !(self.repulsion >= 0.0) {
            return Err(Error::config("mmpf weights must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontierGroup {
    /// Sorted member cells.
    pub cells: Vec<usize>,
    /// Member cell closest to the arithmetic mean of the members.
    pub centroid: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMap {
    pub width: usize,
    pub height: usize,
    /// Cell-unit distances; [`UNREACHED`] where the BFS did not arrive.
    pub dist: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub width: usize,
    pub height: usize,
    /// Potential per cell; `+inf` on cells no distance map reached.
    pub values: Vec<f64>,
}

impl PotentialField {
    pub const SENTINEL: f64 = f64::INFINITY;

    pub fn is_defined(&self, cell: usize) -> bool {
        self.values[cell] != Self::SENTINEL
    }

    /// One CSV line per grid row, top row first; undefined cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                if col > 0 {
                    out.push(',');
                }
                let v = self.values[row * self.width + col];
                if v != Self::SENTINEL {
                    write!(out, "{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage clustering: two frontier cells are linked when their
/// Chebyshev distance is at most `linkage_radius`. Groups are ordered by their
/// lowest member index.
pub fn cluster_frontiers(grid: &OccupancyGrid, frontiers: &[usize], linkage_radius: usize) -> Vec<FrontierGroup> {
    let mut slot = vec![usize::MAX; grid.len()];
    for (k, &c) in frontiers.iter().enumerate() {
        slot[c] = k;
    }
    let mut sets = DisjointSets::new(frontiers.len());
    let r = linkage_radius as i64;
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    for (k, &c) in frontiers.iter().enumerate() {
        let (col, row) = grid.coords(c);
        for dr in -r..=r {
            for dc in -r..=r {
                let (x, y) = (col as i64 + dc, row as i64 + dr);
                if x < 0 || y < 0 || x >= w || y >= h {
                    continue;
                }
                let other = slot[(y * w + x) as usize];
                if other != usize::MAX && other != k {
                    sets.union(k, other);
                }
            }
        }
    }

    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = vec![usize::MAX; frontiers.len()];
    let mut order: Vec<usize> = (0..frontiers.len()).collect();
    order.sort_by_key(|&k| frontiers[k]);
    for k in order {
        let root = sets.find(k);
        if group_of_root[root] == usize::MAX {
            group_of_root[root] = members.len();
            members.push(Vec::new());
        }
        members[group_of_root[root]].push(frontiers[k]);
    }

    members
        .into_iter()
        .map(|cells| {
            let n = cells.len() as f64;
            let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), &c| {
                let (col, row) = grid.coords(c);
                (sx + col as f64, sy + row as f64)
            });
            let (mx, my) = (sx / n, sy / n);
            let centroid = cells
                .iter()
                .copied()
                .map(|c| {
                    let (col, row) = grid.coords(c);
                    ((col as f64 - mx).powi(2) + (row as f64 - my).powi(2), c)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, c)| c)
                .expect("groups are non-empty");
            FrontierGroup { cells, centroid }
        })
        .collect()
}

/// 4-connected BFS over free cells from `source`.
pub fn bfs_distance_map(belief: &OccupancyGrid, source: usize) -> Result<DistanceMap> {
    if source >= belief.len() || belief.get(source) != CellState::Free {
        return Err(Error::domain(format!("BFS source {source} is not a free cell")));
    }
    let mut dist = vec![UNREACHED; belief.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(c) = queue.pop_front() {
        let d = dist[c] + 1;
        for n in belief.neighbors4(c) {
            if dist[n] == UNREACHED && belief.get(n) == CellState::Free {
                dist[n] = d;
                queue.push_back(n);
            }
        }
    }
    Ok(DistanceMap { width: belief.width(), height: belief.height(), dist })
}

/// `F = -sum_g |g| w_a / (d_g + 1) + sum_t w_r / (d_t + 1)`.
///
/// Teammates whose cell is not free in `belief` exert no force.
pub fn potential_field(
    belief: &OccupancyGrid,
    groups: &[FrontierGroup],
    teammates: &[Point],
    cfg: &MmpfConfig,
) -> Result<PotentialField> {
    let mut values = vec![0.0; belief.len()];
    let mut reached = vec![false; belief.len()];
    let mut accumulate = |map: &DistanceMap, weight: f64| {
        for (i, &d) in map.dist.iter().enumerate() {
            if d != UNREACHED {
                values[i] += weight / (f64::from(d) + 1.0);
                reached[i] = true;
            }
        }
    };
    for g in groups {
        accumulate(&bfs_distance_map(belief, g.centroid)?, -(g.cells.len() as f64) * cfg.attraction);
    }
    for &p in teammates {
        if let Some(c) = belief.cell_of(p).filter(|&c| belief.get(c) == CellState::Free) {
            accumulate(&bfs_distance_map(belief, c)?, cfg.repulsion);
        }
    }
    for (v, r) in values.iter_mut().zip(&reached) {
        if !r {
            *v = PotentialField::SENTINEL;
        }
    }
    Ok(PotentialField { width: belief.width(), height: belief.height(), values })
}

/// Steepest descent over 8-neighbours. Moves only on strict decrease and
/// stops on a frontier cell. Returns the visited cells, start first.
fn descend(belief: &OccupancyGrid, field: &PotentialField, is_frontier: &[bool], start: usize) -> Vec<usize> {
    let mut path = vec![start];
    let mut current = start;
    while !is_frontier[current] {
        let best = belief
            .neighbors8(current)
            .filter(|&n| field.is_defined(n))
            .min_by(|&a, &b| field.values[a].total_cmp(&field.values[b]).then(a.cmp(&b)));
        match best {
            Some(n) if field.values[n] < field.values[current] => {
                current = n;
                path.push(n);
            }
            _ => break,
        }
    }
    path
}

/// Centroid of the group whose attraction term is largest at `cell`; ties go
/// to the lower centroid index. `None` if no group is reachable.
fn strongest_group(belief: &OccupancyGrid, groups: &[FrontierGroup], cell: usize) -> Result<Option<usize>> {
    let dist = bfs_distance_map(belief, cell)?;
    Ok(groups
        .iter()
        .filter(|g| dist.dist[g.centroid] != UNREACHED)
        .map(|g| (g.cells.len() as f64 / (f64::from(dist.dist[g.centroid]) + 1.0), g.centroid))
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, c)| c))
}

pub fn mmpf_plan(ctx: &mut PlannerContext<'_>, cfg: &MmpfConfig) -> Result<PlanOutcome> {
    let map = ctx.merged_belief;
    let frontiers = detect_frontiers(map, FrontierConnectivity::Four);
    if frontiers.is_empty() {
        return Ok(PlanOutcome::Complete);
    }
    let groups = cluster_frontiers(map, &frontiers, cfg.linkage_radius);
    let field = potential_field(map, &groups, &ctx.teammate_poses, cfg)?;
    let mut is_frontier = vec![false; map.len()];
    for &f in &frontiers {
        is_frontier[f] = true;
    }
    let start = map.cell_of(ctx.self_pose).filter(|&c| field.is_defined(c));
    let goal = match start {
        Some(s) => {
            let stop = *descend(map, &field, &is_frontier, s).last().expect("path holds the start");
            if cfg.escape_local_minima && !is_frontier[stop] {
                strongest_group(map, &groups, stop)?.unwrap_or(stop)
            } else {
                stop
            }
        }
        // Not connected to any frontier through known free space: head for
        // the nearest group centroid instead.
        None => groups
            .iter()
            .map(|g| (map.cell_center(g.centroid).distance(ctx.self_pose), g.centroid))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, c)| c)
            .expect("at least one group"),
    };
    Ok(PlanOutcome::Goal(map.cell_center(goal)))
}
