use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid};
use crate::world::{ScanResult, ScenarioConfig};

/// Weights of the five reward components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub success: f64,
    pub explore: f64,
    pub overlap: f64,
    pub collision: f64,
    pub time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Paid once, on the round the team reaches the completion threshold.
    pub success_reward: f64,
    /// Charged on every round with at least one collision.
    pub collision_penalty: f64,
    pub weights: RewardWeights,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { success: 1.0, explore: 0.02, overlap: 0.02, collision: 1.0, time: 0.1 }
    }
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { success_reward: 10.0, collision_penalty: 1.0, weights: RewardWeights::default() }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        let all = [self.success_reward, self.collision_penalty, w.success, w.explore, w.overlap, w.collision, w.time];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config("reward constants and weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Raw reward components of one agent for one decision round, plus their
/// weighted sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReward {
    pub success: f64,
    /// Cells this agent revealed that the team did not know before the round.
    pub explore: f64,
    /// Minus the cells this agent observed that a teammate also observed.
    pub overlap: f64,
    pub collision: f64,
    /// Minus the team coverage after the round.
    pub time: f64,
    pub combined: f64,
}

/// Rewards for one round. `round_scans[i]` holds every cell agent `i`
/// observed during the round.
pub fn compute_step_rewards(
    prev_team_map: &OccupancyGrid,
    round_scans: &[ScanResult],
    collisions: &[bool],
    coverage: f64,
    success_now: bool,
    cfg: &RewardConfig,
) -> Result<Vec<StepReward>> {
    if collisions.len() != round_scans.len() {
        return Err(Error::domain("one collision flag per agent scan expected"));
    }
    let n_cells = prev_team_map.len();
    if let Some(s) = round_scans.iter().find(|s| s.width != prev_team_map.width() || s.height != prev_team_map.height()) {
        return Err(Error::GeometryMismatch(format!(
            "team map {}x{} vs scan {}x{}",
            prev_team_map.width(),
            prev_team_map.height(),
            s.width,
            s.height
        )));
    }
    let observed: Vec<Vec<usize>> = round_scans.iter().map(ScanResult::observed_cells).collect();
    // How many agents observed each cell this round.
    let mut seen_by = vec![0u16; n_cells];
    for cells in &observed {
        for &c in cells {
            seen_by[c] += 1;
        }
    }
    let w = &cfg.weights;
    Ok(observed
        .iter()
        .zip(collisions)
        .map(|(cells, &hit)| {
            let explore = cells.iter().filter(|&&c| prev_team_map.get(c) == CellState::Unknown).count() as f64;
            let overlap = -(cells.iter().filter(|&&c| seen_by[c] > 1).count() as f64);
            let success = if success_now { cfg.success_reward } else { 0.0 };
            let collision = if hit { -cfg.collision_penalty } else { 0.0 };
            let time = -coverage;
            let combined =
                w.success * success + w.explore * explore + w.overlap * overlap + w.collision * collision + w.time * time;
            StepReward { success, explore, overlap, collision, time, combined }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Continue,
    Success,
    Timeout,
}

/// Success wins over timeout when both hold.
pub fn check_termination(er: f64, decisions_done: usize, cfg: &ScenarioConfig) -> Termination {
    if er >= cfg.completion_threshold {
        Termination::Success
    } else if decisions_done >= cfg.global_step_budget {
        Termination::Timeout
    } else {
        Termination::Continue
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(g: &OccupancyGrid, freed: &[usize], obstacles: &[usize]) -> ScanResult {
        let mut s = ScanResult::empty_for(g);
        s.freed_cells = freed.to_vec();
        s.obstacle_cells = obstacles.to_vec();
        s
    }

    #[test]
    fn quiet_round_pays_only_time() {
        let g = OccupancyGrid::new(10, 10, 1.0, CellState::Free).unwrap();
        let cfg = RewardConfig::default();
        let r = compute_step_rewards(&g, &[scan(&g, &[], &[]), scan(&g, &[1, 2], &[])], &[false, false], 0.5, false, &cfg)
            .unwrap();
        for x in r {
            assert_eq!(x.combined, -cfg.weights.time * 0.5);
            assert_eq!(x.explore, 0.0);
        }
    }

    #[test]
    fn lone_explorer() {
        let g = OccupancyGrid::new(10, 10, 1.0, CellState::Unknown).unwrap();
        let cfg = RewardConfig::default();
        let cells: Vec<usize> = (0..30).collect();
        let r = compute_step_rewards(&g, &[scan(&g, &cells[..25], &cells[25..]), scan(&g, &[], &[])], &[false, false], 0.0, false, &cfg)
            .unwrap();
        assert_eq!(r[0].explore, 30.0);
        assert_eq!(r[0].overlap, 0.0);
        assert!((r[0].combined - 30.0 * cfg.weights.explore).abs() < 1e-12);
    }

    #[test]
    fn identical_scans_overlap_fully() {
        let g = OccupancyGrid::new(10, 10, 1.0, CellState::Unknown).unwrap();
        let cells: Vec<usize> = (40..50).collect();
        let r = compute_step_rewards(
            &g,
            &[scan(&g, &cells, &[]), scan(&g, &cells, &[])],
            &[false, true],
            0.1,
            true,
            &RewardConfig::default(),
        )
        .unwrap();
        assert_eq!((r[0].overlap, r[1].overlap), (-10.0, -10.0));
        // simultaneous claims count for both agents
        assert_eq!((r[0].explore, r[1].explore), (10.0, 10.0));
        assert_eq!((r[0].collision, r[1].collision), (0.0, -1.0));
        assert_eq!((r[0].success, r[1].success), (10.0, 10.0));
        for x in r {
            assert!(x.explore >= 0.0 && x.overlap <= 0.0 && x.time <= 0.0);
        }
    }

    #[test]
    fn geometry_is_checked() {
        let g = OccupancyGrid::new(10, 10, 1.0, CellState::Unknown).unwrap();
        let other = OccupancyGrid::new(5, 5, 1.0, CellState::Unknown).unwrap();
        let err = compute_step_rewards(&g, &[scan(&other, &[], &[])], &[false], 0.0, false, &RewardConfig::default());
        assert!(matches!(err, Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn termination_rules() {
        let cfg = ScenarioConfig::maze(0);
        assert_eq!(check_termination(0.95, 3, &cfg), Termination::Success);
        assert_eq!(check_termination(0.949, 30, &cfg), Termination::Timeout);
        assert_eq!(check_termination(0.2, 5, &cfg), Termination::Continue);
        assert_eq!(check_termination(0.99, 30, &cfg), Termination::Success);
    }
}
