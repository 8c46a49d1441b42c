use serde::{Deserialize, Serialize};

use super::mapgen::{generate_maze_with_walls, generate_random_obstacles};
use crate::error::{Error, Result};
use crate::grid::OccupancyGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Maze,
    RandomObstacle,
}

/// World and task budget for one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Map side in meters.
    pub side_length: f64,
    /// Meters per cell.
    pub resolution: f64,
    /// Maze room width in cells (mazes only).
    pub corridor_width: usize,
    /// Maze wall band thickness in cells (mazes only).
    pub wall_thickness: usize,
    /// Chance that a wall left standing by the maze carver is opened anyway.
    pub loop_fraction: f64,
    /// Interior obstacle fraction (random-obstacle maps only).
    pub obstacle_density: f64,
    /// Maximum number of planning decisions.
    pub global_step_budget: usize,
    /// Movement steps between decisions.
    pub local_steps_per_decision: usize,
    /// Lidar range in meters.
    pub lidar_range: f64,
    /// Lidar beam spacing in radians.
    pub angular_resolution: f64,
    /// Seconds per movement step.
    pub dt: f64,
    /// Team exploration ratio that ends the episode successfully.
    pub completion_threshold: f64,
    /// Agents spawn within this many meters of a random anchor cell.
    pub spawn_spread: f64,
    /// Map generator seed.
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn maze(seed: u64) -> Self {
        Self {
            kind: ScenarioKind::Maze,
            side_length: 125.0,
            resolution: 1.0,
            corridor_width: 12,
            wall_thickness: 12,
            loop_fraction: 0.3,
            obstacle_density: 0.0,
            global_step_budget: 30,
            local_steps_per_decision: 20,
            lidar_range: 10.0,
            angular_resolution: 1f64.to_radians(),
            dt: 0.1,
            completion_threshold: 0.95,
            spawn_spread: 8.0,
            seed,
        }
    }

    pub fn random_obstacle(seed: u64) -> Self {
        Self {
            kind: ScenarioKind::RandomObstacle,
            corridor_width: 0,
            obstacle_density: 0.15,
            local_steps_per_decision: 30,
            lidar_range: 12.0,
            ..Self::maze(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("side_length", self.side_length),
            ("resolution", self.resolution),
            ("lidar_range", self.lidar_range),
            ("angular_resolution", self.angular_resolution),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("scenario.{name} must be positive, got {v}")));
            }
        }
        if self.local_steps_per_decision == 0 {
            return Err(Error::config("scenario.local_steps_per_decision must be at least 1"));
        }
        if !(self.completion_threshold > 0.0 && self.completion_threshold <= 1.0) {
            return Err(Error::config(format!(
                "scenario.completion_threshold must be in (0, 1], got {}",
                self.completion_threshold
            )));
        }
        if self.kind == ScenarioKind::RandomObstacle && !(0.0..0.5).contains(&self.obstacle_density) {
            return Err(Error::config(format!(
                "scenario.obstacle_density must be in [0, 0.5), got {}",
                self.obstacle_density
            )));
        }
        if !(self.spawn_spread >= 0.0) {
            return Err(Error::config("scenario.spawn_spread must be non-negative"));
        }
        Ok(())
    }
}

/// Generate the ground-truth grid a scenario describes.
pub fn build_world(cfg: &ScenarioConfig) -> Result<OccupancyGrid> {
    cfg.validate()?;
    match cfg.kind {
        ScenarioKind::Maze => generate_maze_with_walls(
            cfg.seed,
            cfg.side_length,
            cfg.resolution,
            cfg.corridor_width,
            cfg.wall_thickness,
            cfg.loop_fraction,
        ),
        ScenarioKind::RandomObstacle => {
            generate_random_obstacles(cfg.seed, cfg.side_length, cfg.resolution, cfg.obstacle_density)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_parameter_defaults() {
        let m = ScenarioConfig::maze(0);
        assert_eq!((m.global_step_budget, m.local_steps_per_decision, m.lidar_range, m.dt), (30, 20, 10.0, 0.1));
        let r = ScenarioConfig::random_obstacle(0);
        assert_eq!((r.global_step_budget, r.local_steps_per_decision, r.lidar_range, r.dt), (30, 30, 12.0, 0.1));
        assert_eq!(m.completion_threshold, 0.95);
        assert_eq!(m.side_length, 125.0);
    }

    #[test]
    fn validation() {
        let mut c = ScenarioConfig::maze(0);
        assert!(c.validate().is_ok());
        c.completion_threshold = 0.0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::maze(0);
        c.local_steps_per_decision = 0;
        assert!(c.validate().is_err());
    }
}
