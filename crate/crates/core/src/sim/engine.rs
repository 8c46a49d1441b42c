//! The episode state machine.
//!
//! Each decision round runs, in order: termination check, message exchange,
//! planning, `local_steps_per_decision` movement steps (navigate, move,
//! resolve collisions, scan) and reward accounting. The round ends early once
//! the team reaches the completion threshold.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::log::{DecisionRecord, EpisodeLog, LogHeader, OutcomeRecord, Replan, StepRecord, LOG_SCHEMA_VERSION};
use super::nav::{NavConfig, Navigator};
use super::reward::{check_termination, compute_step_rewards, RewardConfig, Termination};
use crate::comms::{exchange, CommsConfig, ViewTable};
use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid, Point};
use crate::planners::{canonical_goal, PatchGrid, PlanOutcome, PlannerConfig, PlannerContext};
use crate::rng::{self, StreamRng};
use crate::vehicle::{
    dwa_select, footprint_collides, step_kinematics, sweep_collides, wrap_angle, AgentState, ControlInput, DwaConfig,
    VehicleParams,
};
use crate::world::{build_world, integrate_scan, raycast_scan, reachable_free_cells, ScanResult, ScenarioConfig};

const SPAWN_ANCHOR_TRIES: usize = 64;
const SPAWN_AGENT_TRIES: usize = 256;

/// Everything that defines an episode apart from its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub scenario: ScenarioConfig,
    pub planner: PlannerConfig,
    pub comms: CommsConfig,
    pub vehicle: VehicleParams,
    pub dwa: DwaConfig,
    pub nav: NavConfig,
    pub reward: RewardConfig,
    pub n_agents: usize,
}

impl EpisodeConfig {
    /// Defaults for everything but the scenario, planner and team size.
    pub fn new(scenario: ScenarioConfig, planner: PlannerConfig, n_agents: usize) -> Self {
        Self {
            scenario,
            planner,
            comms: CommsConfig::default(),
            vehicle: VehicleParams::default(),
            dwa: DwaConfig::default(),
            nav: NavConfig::default(),
            reward: RewardConfig::default(),
            n_agents,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::config("n_agents must be at least 1"));
        }
        self.scenario.validate()?;
        self.planner.validate()?;
        self.comms.validate()?;
        self.vehicle.validate()?;
        self.dwa.validate()?;
        self.nav.validate()?;
        self.reward.validate()
    }
}

/// What one agent knew and chose at one decision.
pub struct DecisionSnapshot<'a> {
    pub decision: usize,
    pub agent: usize,
    pub own_belief: &'a OccupancyGrid,
    /// Join of the cached teammate maps; `None` for a team of one.
    pub teammates_merged: Option<&'a OccupancyGrid>,
    pub truth: &'a OccupancyGrid,
    pub state: AgentState,
    /// Teammate positions as last received, agent order, self skipped.
    pub teammate_poses: &'a [Point],
    pub goal: Option<Point>,
}

pub trait EpisodeObserver {
    fn on_decision(&mut self, snapshot: &DecisionSnapshot<'_>) -> Result<()>;
}

/// Observer that ignores everything.
pub struct NoObserver;

impl EpisodeObserver for NoObserver {
    fn on_decision(&mut self, _: &DecisionSnapshot<'_>) -> Result<()> {
        Ok(())
    }
}

pub fn run_episode(cfg: &EpisodeConfig, episode_seed: u64) -> Result<EpisodeLog> {
    run_episode_observed(cfg, episode_seed, &mut NoObserver)
}

pub fn run_episode_observed(
    cfg: &EpisodeConfig,
    episode_seed: u64,
    observer: &mut dyn EpisodeObserver,
) -> Result<EpisodeLog> {
    cfg.validate()?;
    let truth = build_world(&cfg.scenario)?;
    Episode::new(cfg, &truth, episode_seed)?.run(observer)
}

/// Spawn poses: all agents within `spawn_spread` of a random anchor cell, in
/// its connected component, footprint-clear and at least two footprint
/// diameters apart.
fn spawn(
    truth: &OccupancyGrid,
    cfg: &EpisodeConfig,
    rng: &mut StreamRng,
) -> Result<(Vec<AgentState>, Vec<usize>)> {
    let r = cfg.vehicle.footprint_radius;
    let clear: Vec<usize> = (0..truth.len())
        .filter(|&c| truth.get(c) == CellState::Free && !footprint_collides(truth, truth.cell_center(c), r))
        .collect();
    if clear.is_empty() {
        return Err(Error::Scenario("no free cell fits the vehicle footprint".into()));
    }
    let min_gap = 4.0 * r;
    for _ in 0..SPAWN_ANCHOR_TRIES {
        let anchor = *clear.choose(rng).expect("non-empty");
        let reachable = reachable_free_cells(truth, anchor)?;
        let mut in_component = vec![false; truth.len()];
        for &c in &reachable {
            in_component[c] = true;
        }
        let a = truth.cell_center(anchor);
        let pool: Vec<usize> = clear
            .iter()
            .copied()
            .filter(|&c| in_component[c] && truth.cell_center(c).distance(a) <= cfg.scenario.spawn_spread)
            .collect();
        let mut placed: Vec<Point> = Vec::with_capacity(cfg.n_agents);
        for _ in 0..SPAWN_AGENT_TRIES {
            if placed.len() == cfg.n_agents {
                break;
            }
            let p = truth.cell_center(*pool.choose(rng).expect("anchor is in its own pool"));
            if placed.iter().all(|q| q.distance(p) >= min_gap) {
                placed.push(p);
            }
        }
        if placed.len() == cfg.n_agents {
            let states = placed
                .into_iter()
                .map(|p| AgentState { x: p.x, y: p.y, theta: wrap_angle(rng.gen_range(-PI..PI)), v: 0.0 })
                .collect();
            return Ok((states, reachable));
        }
    }
    Err(Error::Scenario(format!("could not place {} agents after {SPAWN_ANCHOR_TRIES} anchors", cfg.n_agents)))
}

struct Episode<'a> {
    cfg: &'a EpisodeConfig,
    truth: &'a OccupancyGrid,
    seed: u64,
    patches: PatchGrid,
    reachable: Vec<bool>,
    reachable_count: usize,
    states: Vec<AgentState>,
    beliefs: Vec<OccupancyGrid>,
    nav_maps: Vec<OccupancyGrid>,
    navigators: Vec<Navigator>,
    team: OccupancyGrid,
    team_known: usize,
    views: ViewTable,
    comms_rng: StreamRng,
    planner_rngs: Vec<StreamRng>,
    initial_states: Vec<AgentState>,
    initial_known: usize,
    // per-round accumulators
    round_mark: Vec<Vec<u32>>,
    round_freed: Vec<Vec<usize>>,
    round_obstacles: Vec<Vec<usize>>,
    newly_known: Vec<usize>,
}

impl<'a> Episode<'a> {
    fn new(cfg: &'a EpisodeConfig, truth: &'a OccupancyGrid, seed: u64) -> Result<Self> {
        let n = cfg.n_agents;
        let (states, reachable_cells) = spawn(truth, cfg, &mut rng::stream(seed, "spawn", 0))?;
        let mut reachable = vec![false; truth.len()];
        for &c in &reachable_cells {
            reachable[c] = true;
        }
        let (w, h) = truth.extent();
        let blank = OccupancyGrid::unknown_like(truth);
        let mut ep = Self {
            cfg,
            truth,
            seed,
            patches: PatchGrid::for_map(w, h),
            reachable,
            reachable_count: reachable_cells.len(),
            initial_states: states.clone(),
            states,
            beliefs: vec![blank.clone(); n],
            nav_maps: Vec::new(),
            navigators: (0..n).map(|_| Navigator::new()).collect(),
            team: blank.clone(),
            team_known: 0,
            views: ViewTable::initial(&[&blank], &[Point::default()])?,
            comms_rng: cfg.comms.stream(seed),
            planner_rngs: (0..n).map(|i| rng::stream(seed, "planner", i as u64)).collect(),
            initial_known: 0,
            round_mark: vec![vec![0; truth.len()]; n],
            round_freed: vec![Vec::new(); n],
            round_obstacles: vec![Vec::new(); n],
            newly_known: Vec::new(),
        };
        for i in 0..n {
            ep.sense(i, 0)?;
        }
        ep.initial_known = ep.team_known;
        ep.newly_known.clear();
        let refs: Vec<&OccupancyGrid> = ep.beliefs.iter().collect();
        let poses: Vec<Point> = ep.states.iter().map(AgentState::position).collect();
        ep.views = ViewTable::initial(&refs, &poses)?;
        Ok(ep)
    }

    fn er(&self) -> f64 {
        self.team_known as f64 / self.reachable_count as f64
    }

    /// Scan from agent `i`'s pose and fold the result into every map that
    /// tracks it. `round` tags the cells for reward accounting.
    fn sense(&mut self, i: usize, round: u32) -> Result<()> {
        let s = self.states[i];
        let sc = &self.cfg.scenario;
        let scan = raycast_scan(self.truth, s.position(), s.theta, sc.lidar_range, sc.angular_resolution)?;
        integrate_scan(&mut self.beliefs[i], &scan)?;
        if let Some(nav) = self.nav_maps.get_mut(i) {
            integrate_scan(nav, &scan)?;
        }
        for &c in &scan.freed_cells {
            if self.team.get(c) == CellState::Unknown {
                self.team.set(c, CellState::Free);
                if self.reachable[c] {
                    self.team_known += 1;
                    self.newly_known.push(c);
                }
            }
            if self.round_mark[i][c] != round {
                self.round_mark[i][c] = round;
                self.round_freed[i].push(c);
            }
        }
        for &c in &scan.obstacle_cells {
            self.team.set(c, CellState::Obstacle);
            if self.round_mark[i][c] != round {
                self.round_mark[i][c] = round;
                self.round_obstacles[i].push(c);
            }
        }
        Ok(())
    }

    fn round_scan(&mut self, i: usize) -> ScanResult {
        let mut s = ScanResult::empty_for(self.truth);
        s.freed_cells = std::mem::take(&mut self.round_freed[i]);
        s.obstacle_cells = std::mem::take(&mut self.round_obstacles[i]);
        s.freed_cells.sort_unstable();
        s.obstacle_cells.sort_unstable();
        s
    }

    fn plan(&mut self, decision: usize, observer: &mut dyn EpisodeObserver) -> Result<Vec<Option<Point>>> {
        let n = self.cfg.n_agents;
        let mut goals = Vec::with_capacity(n);
        let mut nav_maps = Vec::with_capacity(n);
        for i in 0..n {
            let merged = self.views.merged_for(i, &self.beliefs[i])?;
            let teammate_poses = self.views.poses_for(i);
            let outcome = {
                let mut ctx = PlannerContext {
                    agent_id: i,
                    own_belief: &self.beliefs[i],
                    merged_belief: &merged,
                    self_pose: self.states[i].position(),
                    teammate_poses: teammate_poses.clone(),
                    rng: &mut self.planner_rngs[i],
                };
                self.cfg.planner.plan(&mut ctx)?
            };
            let goal = match outcome {
                PlanOutcome::Goal(p) => Some(canonical_goal(p, &self.patches)?),
                PlanOutcome::Complete => None,
            };
            let teammates = self.views.teammates_merged(i)?;
            observer.on_decision(&DecisionSnapshot {
                decision,
                agent: i,
                own_belief: &self.beliefs[i],
                teammates_merged: teammates.as_ref(),
                truth: self.truth,
                state: self.states[i],
                teammate_poses: &teammate_poses,
                goal,
            })?;
            goals.push(goal);
            nav_maps.push(merged);
        }
        self.nav_maps = nav_maps;
        Ok(goals)
    }

    /// Whether agent `i` is done with `goal`: close enough, or the goal turned
    /// out to be inside an obstacle.
    fn arrived(&self, i: usize, goal: Point) -> bool {
        let map = &self.nav_maps[i];
        self.states[i].position().distance(goal) <= self.cfg.nav.arrival_radius
            || map.cell_of(goal).is_some_and(|c| map.get(c) == CellState::Obstacle)
    }

    /// Plan a new goal for agent `i` from its navigation map, which holds the
    /// decision-time merged view plus everything it has sensed since.
    fn replan(&mut self, i: usize) -> Result<Option<Point>> {
        let teammate_poses = self.views.poses_for(i);
        let mut ctx = PlannerContext {
            agent_id: i,
            own_belief: &self.beliefs[i],
            merged_belief: &self.nav_maps[i],
            self_pose: self.states[i].position(),
            teammate_poses,
            rng: &mut self.planner_rngs[i],
        };
        match self.cfg.planner.plan(&mut ctx)? {
            PlanOutcome::Goal(p) => Ok(Some(canonical_goal(p, &self.patches)?)),
            PlanOutcome::Complete => Ok(None),
        }
    }

    fn control(&mut self, i: usize, goal: Option<Point>) -> Result<ControlInput> {
        let s = self.states[i];
        let Some(goal) = goal else {
            let a = (-s.v / self.cfg.scenario.dt).clamp(-self.cfg.vehicle.a_max, self.cfg.vehicle.a_max);
            return Ok(ControlInput { a, phi: 0.0 });
        };
        let map = &self.nav_maps[i];
        let wp = self.navigators[i].waypoint(map, &self.cfg.nav, s.position(), goal)?;
        Ok(dwa_select(s, wp, map, &self.cfg.dwa, &self.cfg.vehicle, self.cfg.scenario.dt))
    }

    fn run(mut self, observer: &mut dyn EpisodeObserver) -> Result<EpisodeLog> {
        let n = self.cfg.n_agents;
        let sc = self.cfg.scenario.clone();
        let header = LogHeader {
            schema_version: LOG_SCHEMA_VERSION,
            config: self.cfg.clone(),
            episode_seed: self.seed,
            reachable_cells: self.reachable_count,
            initial_states: self.initial_states.clone(),
            initial_known: self.initial_known,
            initial_er: self.er(),
        };
        let mut steps = Vec::new();
        let mut decisions = Vec::new();
        let mut step = 0usize;
        let mut done = 0usize;
        let status = loop {
            let status = check_termination(self.er(), done, &sc);
            if status != Termination::Continue {
                break status;
            }
            let decision = done + 1;
            let round = decision as u32;

            let beliefs: Vec<&OccupancyGrid> = self.beliefs.iter().collect();
            let poses: Vec<Point> = self.states.iter().map(AgentState::position).collect();
            let deliveries = exchange(&beliefs, &poses, &mut self.views, &self.cfg.comms, decision, &mut self.comms_rng)?;

            let goals = self.plan(decision, observer)?;
            let mut active = goals.clone();
            let prev_team = self.team.clone();
            let mut collided_in_round = vec![false; n];

            for _ in 0..sc.local_steps_per_decision {
                step += 1;
                let mut controls = Vec::with_capacity(n);
                let mut collisions = Vec::with_capacity(n);
                let mut replans = Vec::new();
                for i in 0..n {
                    if self.cfg.nav.replan_on_arrival {
                        if let Some(g) = active[i].filter(|&g| self.arrived(i, g)) {
                            let fresh = self.replan(i)?;
                            if fresh != Some(g) {
                                active[i] = fresh;
                                replans.push(Replan { agent: i, goal: fresh });
                            }
                        }
                    }
                    let u = self.control(i, active[i])?;
                    let s = self.states[i];
                    let mut next = step_kinematics(s, u, sc.dt, &self.cfg.vehicle);
                    let hit = !self.truth.contains(next.position())
                        || sweep_collides(
                            self.truth,
                            s.position(),
                            next.position(),
                            self.cfg.vehicle.footprint_radius,
                            self.truth.resolution() / 4.0,
                        );
                    if hit {
                        next = AgentState { v: 0.0, ..s };
                    }
                    self.states[i] = next;
                    self.sense(i, round)?;
                    collided_in_round[i] |= hit;
                    controls.push(u);
                    collisions.push(hit);
                }
                steps.push(StepRecord {
                    decision,
                    step,
                    states: self.states.clone(),
                    controls,
                    collisions,
                    replans,
                    er: self.er(),
                });
                if self.er() >= sc.completion_threshold {
                    break;
                }
            }

            let er = self.er();
            let scans: Vec<ScanResult> = (0..n).map(|i| self.round_scan(i)).collect();
            let rewards =
                compute_step_rewards(&prev_team, &scans, &collided_in_round, er, er >= sc.completion_threshold, &self.cfg.reward)?;
            let mut newly_known = std::mem::take(&mut self.newly_known);
            newly_known.sort_unstable();
            decisions.push(DecisionRecord { decision, goals, deliveries, rewards, newly_known, er });
            done += 1;
        };
        let outcome = OutcomeRecord { status, decisions: done, steps: step, final_er: self.er() };
        Ok(EpisodeLog { header, steps, decisions, outcome })
    }
}
