//! Dynamic Window Approach over a sampled (acceleration, steering) lattice.
//!
//! Each candidate control is held for `horizon_steps` kinematic steps. The
//! rollout endpoint is scored as `L_g - alpha * O_p`, with `L_g` the distance
//! to the goal and `O_p` the logarithmic obstacle penalty, and the lowest
//! score wins. Since `O_p <= 0`, subtracting it charges for proximity to
//! obstacles.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::footprint::sweep_collides;
use super::kinematics::{step_kinematics, AgentState, ControlInput, VehicleParams};
use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid, Point};

/// Value used for `log(0)`.
pub const OBSTACLE_PENALTY_FLOOR: f64 = -1.0e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwaConfig {
    /// Obstacle penalty weight.
    pub alpha: f64,
    /// Distance (m) below which the obstacle penalty applies.
    pub penalty_onset: f64,
    pub accel_samples: usize,
    pub steer_samples: usize,
    pub horizon_steps: usize,
}

impl Default for DwaConfig {
    fn default() -> Self {
        Self { alpha: 1.0, penalty_onset: 2.0, accel_samples: 7, steer_samples: 11, horizon_steps: 10 }
    }
}

impl DwaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.penalty_onset > 0.0) {
            return Err(Error::config("dwa.alpha and dwa.penalty_onset must be positive"));
        }
        if self.accel_samples < 3 || self.steer_samples < 3 {
            return Err(Error::config("dwa lattice needs at least 3 samples per axis"));
        }
        if self.horizon_steps == 0 {
            return Err(Error::config("dwa.horizon_steps must be at least 1"));
        }
        Ok(())
    }
}

/// `0` when `l_o >= c`, otherwise `ln(l_o / c)`, floored at
/// [`OBSTACLE_PENALTY_FLOOR`].
pub fn obstacle_penalty(l_o: f64, c: f64) -> f64 {
    if l_o >= c {
        0.0
    } else {
        (l_o / c).ln().max(OBSTACLE_PENALTY_FLOOR)
    }
}

/// Distance from `p` to the nearest obstacle cell center; `+inf` if the grid
/// holds no obstacle.
pub fn nearest_obstacle_distance(belief: &OccupancyGrid, p: Point) -> Result<f64> {
    if !belief.contains(p) {
        return Err(Error::domain(format!("point ({}, {}) outside the grid", p.x, p.y)));
    }
    Ok((0..belief.len())
        .filter(|&i| belief.get(i) == CellState::Obstacle)
        .map(|i| belief.cell_center(i).distance(p))
        .fold(f64::INFINITY, f64::min))
}

/// Like [`nearest_obstacle_distance`] but only looks at cell centers closer
/// than `radius`; returns `+inf` when none is. Exact whenever the true
/// distance is below `radius`.
fn nearest_obstacle_within(belief: &OccupancyGrid, p: Point, radius: f64) -> f64 {
    let res = belief.resolution();
    let lo = |v: f64| (((v - radius) / res - 0.5).floor().max(0.0)) as usize;
    let hi = |v: f64, n: usize| ((((v + radius) / res - 0.5).ceil().max(0.0)) as usize).min(n - 1);
    let mut best = f64::INFINITY;
    for row in lo(p.y)..=hi(p.y, belief.height()) {
        for col in lo(p.x)..=hi(p.x, belief.width()) {
            let i = belief.index(col, row);
            if belief.get(i) == CellState::Obstacle {
                let d = belief.cell_center(i).distance(p);
                if d < radius && d < best {
                    best = d;
                }
            }
        }
    }
    best
}

/// Radius around `p`, capped near `reach`, within which the footprint
/// centre can go anywhere without touching an obstacle or the grid edge.
fn footprint_safe_radius(belief: &OccupancyGrid, p: Point, reach: f64, params: &VehicleParams) -> f64 {
    let res = belief.resolution();
    let (w, h) = belief.extent();
    let edge = p.x.min(p.y).min(w - p.x).min(h - p.y);
    // centre distance overestimates the distance to a cell square by at most
    // half its diagonal
    let half_diag = res * std::f64::consts::FRAC_1_SQRT_2;
    let probe = reach + params.footprint_radius + 2.0 * res;
    let obstacle = nearest_obstacle_within(belief, p, probe).min(probe) - half_diag;
    edge.min(obstacle) - params.footprint_radius
}

fn linspace(max: f64, n: usize) -> impl Iterator<Item = f64> {
    let span = (n - 1) as f64;
    (0..n).map(move |i| max * ((2 * i) as f64 - span) / span)
}

/// The full control lattice in (accel-major, steer-minor) order. Odd sample
/// counts include exact zeros.
pub fn control_lattice(cfg: &DwaConfig, params: &VehicleParams) -> Vec<ControlInput> {
    linspace(params.a_max, cfg.accel_samples)
        .flat_map(|a| linspace(params.phi_max, cfg.steer_samples).map(move |phi| ControlInput { a, phi }))
        .collect()
}

/// States after each of `horizon` steps under a constant control.
pub fn rollout(start: AgentState, u: ControlInput, dt: f64, horizon: usize, params: &VehicleParams) -> Vec<AgentState> {
    let mut out = Vec::with_capacity(horizon);
    let mut s = start;
    for _ in 0..horizon {
        s = step_kinematics(s, u, dt, params);
        out.push(s);
    }
    out
}

/// Score of a rollout endpoint; `None` if the swept footprint hits a known
/// obstacle.
pub fn rollout_cost(
    start: AgentState,
    states: &[AgentState],
    goal: Point,
    belief: &OccupancyGrid,
    cfg: &DwaConfig,
    params: &VehicleParams,
) -> Option<f64> {
    score_rollout(start, states, goal, belief, cfg, params, 0.0)
}

fn score_rollout(
    start: AgentState,
    states: &[AgentState],
    goal: Point,
    belief: &OccupancyGrid,
    cfg: &DwaConfig,
    params: &VehicleParams,
    safe_radius: f64,
) -> Option<f64> {
    // Chords with both ends inside the safe disc around the start cannot
    // collide, so only the rest is swept.
    let spacing = belief.resolution() / 4.0;
    let origin = start.position();
    let mut prev = origin;
    for s in states {
        let p = s.position();
        let inside = prev.distance(origin) < safe_radius && p.distance(origin) < safe_radius;
        if !inside && sweep_collides(belief, prev, p, params.footprint_radius, spacing) {
            return None;
        }
        prev = p;
    }
    let end = states.last().map_or(start.position(), AgentState::position);
    let l_o = nearest_obstacle_within(belief, end, cfg.penalty_onset);
    Some(end.distance(goal) - cfg.alpha * obstacle_penalty(l_o, cfg.penalty_onset))
}

fn tie_order(a: &(f64, ControlInput), b: &(f64, ControlInput)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.phi.abs().total_cmp(&b.1.phi.abs()))
        .then(a.1.a.abs().total_cmp(&b.1.a.abs()))
        .then(a.1.phi.total_cmp(&b.1.phi))
        .then(a.1.a.total_cmp(&b.1.a))
}

/// Pick the best control among `candidates`. The result does not depend on
/// the order of `candidates`.
pub fn dwa_select_among(
    candidates: &[ControlInput],
    state: AgentState,
    goal: Point,
    belief: &OccupancyGrid,
    cfg: &DwaConfig,
    params: &VehicleParams,
    dt: f64,
) -> ControlInput {
    let safe_radius = footprint_safe_radius(belief, state.position(), cfg.horizon_steps as f64 * dt * params.v_max, params);
    candidates
        .iter()
        .filter_map(|&u| {
            let states = rollout(state, u, dt, cfg.horizon_steps, params);
            score_rollout(state, &states, goal, belief, cfg, params, safe_radius).map(|c| (c, u))
        })
        .min_by(tie_order)
        .map(|(_, u)| u)
        .unwrap_or(ControlInput { a: -params.a_max * sign(state.v), phi: 0.0 })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Best control on the full lattice; full brake when every rollout collides.
pub fn dwa_select(
    state: AgentState,
    goal: Point,
    belief: &OccupancyGrid,
    cfg: &DwaConfig,
    params: &VehicleParams,
    dt: f64,
) -> ControlInput {
    dwa_select_among(&control_lattice(cfg, params), state, goal, belief, cfg, params, dt)
}
