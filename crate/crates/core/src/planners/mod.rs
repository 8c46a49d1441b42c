//! Frontier-driven exploration planners.
//!
//! All planners read a [`PlannerContext`] snapshot and return a world-frame
//! goal, or [`PlanOutcome::Complete`] when no frontier is left to chase.

mod action;
mod mmpf;
mod rrt;
mod utility;
mod voronoi;

use serde::{Deserialize, Serialize};

pub use action::{canonical_goal, decode_goal, encode_goal, BiLevelAction, PatchGrid, PATCHES_PER_SIDE};
pub use mmpf::{
    bfs_distance_map, cluster_frontiers, mmpf_plan, potential_field, DistanceMap, FrontierGroup, MmpfConfig,
    PotentialField, UNREACHED,
};
pub use rrt::{rrt_plan, RrtConfig};
pub use utility::{info_gain, min_max_normalize, select_by_utility};
pub use voronoi::{voronoi_partition, voronoi_plan, VoronoiConfig};

use crate::error::Result;
use crate::grid::{OccupancyGrid, Point};
use crate::rng::StreamRng;

/// Everything a planner may look at for one decision.
pub struct PlannerContext<'a> {
    pub agent_id: usize,
    pub own_belief: &'a OccupancyGrid,
    /// Own belief joined with the latest received teammate maps.
    pub merged_belief: &'a OccupancyGrid,
    pub self_pose: Point,
    /// Last known teammate positions, in agent order with `agent_id` skipped.
    pub teammate_poses: Vec<Point>,
    pub rng: &'a mut StreamRng,
}

impl PlannerContext<'_> {
    /// Positions of the whole team indexed by agent id.
    pub fn team_poses(&self) -> Vec<Point> {
        let mut all = self.teammate_poses.clone();
        all.insert(self.agent_id.min(all.len()), self.self_pose);
        all
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PlanOutcome {
    Goal(Point),
    /// No frontier remains in the merged belief.
    Complete,
}

impl PlanOutcome {
    pub fn goal(self) -> Option<Point> {
        match self {
            PlanOutcome::Goal(p) => Some(p),
            PlanOutcome::Complete => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlannerConfig {
    Rrt(RrtConfig),
    Mmpf(MmpfConfig),
    Voronoi(VoronoiConfig),
}

impl PlannerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerConfig::Rrt(_) => "rrt",
            PlannerConfig::Mmpf(_) => "mmpf",
            PlannerConfig::Voronoi(_) => "voronoi",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PlannerConfig::Rrt(c) => c.validate(),
            PlannerConfig::Mmpf(c) => c.validate(),
            PlannerConfig::Voronoi(c) => c.validate(),
        }
    }

    pub fn plan(&self, ctx: &mut PlannerContext<'_>) -> Result<PlanOutcome> {
        match self {
            PlannerConfig::Rrt(c) => rrt_plan(ctx, c),
            PlannerConfig::Mmpf(c) => mmpf_plan(ctx, c),
            PlannerConfig::Voronoi(c) => voronoi_plan(ctx, c),
        }
    }
}
