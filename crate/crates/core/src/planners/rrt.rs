//! Multi-agent RRT exploration.
//!
//! A tree rooted at the agent grows toward uniform samples in fixed-length
//! extensions. Extensions that stay clear of known obstacles land either in
//! the tree (known free space) or in the target list (unknown space). Targets
//! are ranked by normalised information gain minus normalised distance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::utility::{info_gain, select_by_utility};
use super::{PlanOutcome, PlannerContext};
use crate::error::{Error, Result};
use crate::grid::{CellState, Point};
use crate::world::{detect_frontiers, segment_is_clear, FrontierConnectivity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrtConfig {
    /// Extension distance in meters.
    pub step_length: f64,
    pub max_iterations: usize,
    /// Information-gain radius in meters.
    pub ig_radius: f64,
    /// Keep the tree between decisions. Only rebuilding is implemented; the
    /// flag is rejected when set.
    #[serde(default)]
    pub persist_tree: bool,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self { step_length: 5.0, max_iterations: 300, ig_radius: 10.0, persist_tree: false }
    }
}

impl RrtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_length > 0.0) || !(self.ig_radius > 0.0) {
            return Err(Error::config("rrt.step_length and rrt.ig_radius must be positive"));
        }
        if self.persist_tree {
            return Err(Error::config("rrt.persist_tree is not supported; trees are rebuilt every decision"));
        }
        Ok(())
    }
}

/// Grow the tree and return the highest-utility target, falling back to the
/// nearest frontier cell when no extension reached unknown space.
pub fn rrt_plan(ctx: &mut PlannerContext<'_>, cfg: &RrtConfig) -> Result<PlanOutcome> {
    let map = ctx.merged_belief;
    match map.cell_of(ctx.self_pose) {
        Some(c) if map.get(c) == CellState::Free => {}
        _ => return Err(Error::domain("rrt root is not a free cell of the merged belief")),
    }
    let (w, h) = map.extent();
    let mut tree = vec![ctx.self_pose];
    let mut targets: Vec<Point> = Vec::new();

    for _ in 0..cfg.max_iterations {
        let p = Point::new(ctx.rng.gen_range(0.0..w), ctx.rng.gen_range(0.0..h));
        let mut nearest = 0;
        let mut best = f64::INFINITY;
        for (i, node) in tree.iter().enumerate() {
            let d = node.distance(p);
            if d < best {
                best = d;
                nearest = i;
            }
        }
        if best == 0.0 {
            continue;
        }
        let s = tree[nearest];
        let t = Point::new(s.x + (p.x - s.x) / best * cfg.step_length, s.y + (p.y - s.y) / best * cfg.step_length);
        let Some(cell) = map.cell_of(t) else {
            continue;
        };
        if !segment_is_clear(map, s, t) {
            continue;
        }
        match map.get(cell) {
            CellState::Unknown => targets.push(t),
            _ => tree.push(t),
        }
    }

    if targets.is_empty() {
        let frontiers = detect_frontiers(map, FrontierConnectivity::Four);
        let nearest = frontiers
            .iter()
            .map(|&c| (map.cell_center(c).distance(ctx.self_pose), c))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        return Ok(match nearest {
            Some((_, c)) => PlanOutcome::Goal(map.cell_center(c)),
            None => PlanOutcome::Complete,
        });
    }

    let gains: Vec<f64> = targets.iter().map(|&t| info_gain(map, t, cfg.ig_radius) as f64).collect();
    let costs: Vec<f64> = targets.iter().map(|t| t.distance(ctx.self_pose)).collect();
    let (best, _) = select_by_utility(&gains, &costs).expect("non-empty target list");
    Ok(PlanOutcome::Goal(targets[best]))
}
