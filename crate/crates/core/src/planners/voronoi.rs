//! Voronoi-partitioned frontier selection.
//!
//! Free cells are labelled with the nearest agent. Each agent picks, among the
//! frontier cells of its own region, the one with the best normalised
//! information gain minus normalised distance.

use serde::{Deserialize, Serialize};

use super::utility::{info_gain, select_by_utility};
use super::{PlanOutcome, PlannerContext};
use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid, Point};
use crate::world::{detect_frontiers, FrontierConnectivity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoronoiConfig {
    /// Information-gain radius in meters.
    pub ig_radius: f64,
}

impl Default for VoronoiConfig {
    fn default() -> Self {
        Self { ig_radius: 10.0 }
    }
}

impl VoronoiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ig_radius > 0.0) {
            return Err(Error::config("voronoi.ig_radius must be positive"));
        }
        Ok(())
    }
}

/// Nearest-agent label (squared Euclidean distance) for every free cell,
/// `None` elsewhere. Ties go to the lowest agent index.
pub fn voronoi_partition(belief: &OccupancyGrid, agents: &[Point]) -> Vec<Option<usize>> {
    (0..belief.len())
        .map(|i| {
            if belief.get(i) != CellState::Free {
                return None;
            }
            let c = belief.cell_center(i);
            let mut best: Option<(usize, f64)> = None;
            for (k, a) in agents.iter().enumerate() {
                let d = (c.x - a.x) * (c.x - a.x) + (c.y - a.y) * (c.y - a.y);
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((k, d));
                }
            }
            best.map(|(k, _)| k)
        })
        .collect()
}

pub fn voronoi_plan(ctx: &mut PlannerContext<'_>, cfg: &VoronoiConfig) -> Result<PlanOutcome> {
    let map = ctx.merged_belief;
    let frontiers = detect_frontiers(map, FrontierConnectivity::Four);
    if frontiers.is_empty() {
        return Ok(PlanOutcome::Complete);
    }
    let labels = voronoi_partition(map, &ctx.team_poses());
    let own: Vec<usize> = frontiers.iter().copied().filter(|&c| labels[c] == Some(ctx.agent_id)).collect();
    let eligible = if own.is_empty() { frontiers } else { own };

    let gains: Vec<f64> = eligible.iter().map(|&c| info_gain(map, map.cell_center(c), cfg.ig_radius) as f64).collect();
    let costs: Vec<f64> = eligible.iter().map(|&c| map.cell_center(c).distance(ctx.self_pose)).collect();
    let (best, _) = select_by_utility(&gains, &costs).expect("eligible set is non-empty");
    Ok(PlanOutcome::Goal(map.cell_center(eligible[best])))
}
