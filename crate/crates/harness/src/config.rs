//! Experiment configuration: a versioned TOML file describing a matrix of
//! scenario sets, planners, team sizes and dropout ratios.
//!
//! Unknown keys are rejected. Errors carry the line and column of the
//! offending key when the text is available.

use std::ops::Range;
use std::path::{Path, PathBuf};

use explore_core::comms::CommsConfig;
use explore_core::planners::{MmpfConfig, PlannerConfig, RrtConfig, VoronoiConfig};
use explore_core::sim::{EpisodeConfig, NavConfig, RewardConfig};
use explore_core::vehicle::{DwaConfig, VehicleParams};
use explore_core::world::{ScenarioConfig, ScenarioKind};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_EPISODES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Rrt,
    Mmpf,
    Voronoi,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Rrt => "rrt",
            PlannerKind::Mmpf => "mmpf",
            PlannerKind::Voronoi => "voronoi",
        }
    }

    /// Name used in summary tables.
    pub fn display(self) -> &'static str {
        match self {
            PlannerKind::Rrt => "RRT",
            PlannerKind::Mmpf => "mmPF",
            PlannerKind::Voronoi => "Voronoi",
        }
    }
}

/// A named range of map seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSet {
    pub name: String,
    pub first_seed: u64,
    /// Number of distinct maps; episodes cycle through them.
    pub count: u64,
}

/// Scenario kind, seed sets and optional overrides of the kind's defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub sets: Vec<ScenarioSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corridor_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_thickness: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loop_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle_density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_step_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_steps_per_decision: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lidar_range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spawn_spread: Option<f64>,
}

impl ScenarioSpec {
    /// The full scenario for one map seed.
    pub fn resolve(&self, seed: u64) -> ScenarioConfig {
        let mut s = match self.kind {
            ScenarioKind::Maze => ScenarioConfig::maze(seed),
            ScenarioKind::RandomObstacle => ScenarioConfig::random_obstacle(seed),
        };
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { s.$f = v; } )* };
        }
        apply!(
            side_length,
            resolution,
            corridor_width,
            wall_thickness,
            loop_fraction,
            obstacle_density,
            global_step_budget,
            local_steps_per_decision,
            lidar_range,
            angular_resolution,
            dt,
            completion_threshold,
            spawn_spread
        );
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Matrix {
    pub planners: Vec<PlannerKind>,
    pub team_sizes: Vec<usize>,
    pub dropout: Vec<f64>,
}

impl Default for Matrix {
    fn default() -> Self {
        Self { planners: vec![PlannerKind::Rrt], team_sizes: vec![3], dropout: vec![0.0] }
    }
}

/// Per-planner settings; only the ones named in the matrix are used.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    pub rrt: RrtConfig,
    pub mmpf: MmpfConfig,
    pub voronoi: VoronoiConfig,
}

impl PlannerSettings {
    pub fn config(&self, kind: PlannerKind) -> PlannerConfig {
        match kind {
            PlannerKind::Rrt => PlannerConfig::Rrt(self.rrt.clone()),
            PlannerKind::Mmpf => PlannerConfig::Mmpf(self.mmpf.clone()),
            PlannerKind::Voronoi => PlannerConfig::Voronoi(self.voronoi.clone()),
        }
    }
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_episodes() -> usize {
    DEFAULT_EPISODES
}

fn default_thresholds() -> Vec<f64> {
    explore_core::metrics::DEFAULT_THRESHOLDS.to_vec()
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub master_seed: u64,
    /// Episodes per matrix cell.
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    /// Result directory; relative paths resolve against the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Worker threads; the machine's parallelism when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    /// Write one JSONL log per episode.
    #[serde(default = "default_true")]
    pub write_logs: bool,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub matrix: Matrix,
    #[serde(default)]
    pub planner: PlannerSettings,
    /// Comms settings; `dropout_p` is overridden by the matrix.
    #[serde(default)]
    pub comms: CommsConfig,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub dwa: DwaConfig,
    #[serde(default)]
    pub nav: NavConfig,
    #[serde(default)]
    pub reward: RewardConfig,
}

/// One point of the experiment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: u32,
    pub set: usize,
    pub planner: PlannerKind,
    pub team_size: usize,
    pub dropout: f64,
}

impl ExperimentConfig {
    /// Parse and validate a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parse and validate config text; `file` only labels error messages.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let span = e.span().unwrap_or(0..0);
            located(text, file, span, e.message().to_string())
        })?;
        cfg.validate().map_err(|(path, msg)| {
            let span = key_span(text, &path).unwrap_or(0..0);
            located(text, file, span, msg)
        })?;
        Ok(cfg)
    }

    /// Validate without source text, for configs built in code.
    pub fn check(&self) -> Result<()> {
        self.validate().map_err(|(path, msg)| HarnessError::Invalid(format!("{}: {msg}", path.join("."))))
    }

    /// Semantic checks; the error names the key path at fault.
    fn validate(&self) -> std::result::Result<(), (Vec<&'static str>, String)> {
        let err = |path: &[&'static str], msg: String| Err((path.to_vec(), msg));
        if self.version != CONFIG_VERSION {
            return err(&["version"], format!("unsupported config version {}, expected {CONFIG_VERSION}", self.version));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return err(&["name"], "name must be non-empty and use only letters, digits, '-' and '_'".into());
        }
        if self.episodes == 0 {
            return err(&["episodes"], "episodes must be at least 1".into());
        }
        if self.episodes > u32::MAX as usize {
            return err(&["episodes"], "episodes is too large".into());
        }
        if self.workers == Some(0) {
            return err(&["workers"], "workers must be at least 1".into());
        }
        if self.thresholds.is_empty() {
            return err(&["thresholds"], "thresholds must not be empty".into());
        }
        for &t in &self.thresholds {
            if !(t > 0.0 && t <= 1.0) {
                return err(&["thresholds"], format!("threshold {t} is outside (0, 1]"));
            }
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return err(&["thresholds"], "thresholds must be strictly increasing".into());
        }
        if self.scenario.sets.is_empty() {
            return err(&["scenario", "sets"], "at least one scenario set is required".into());
        }
        for (k, s) in self.scenario.sets.iter().enumerate() {
            if s.count == 0 {
                return err(&["scenario", "sets"], format!("scenario set {:?} has count 0", s.name));
            }
            if self.scenario.sets[..k].iter().any(|o| o.name == s.name) {
                return err(&["scenario", "sets"], format!("duplicate scenario set name {:?}", s.name));
            }
        }
        if let Err(e) = self.scenario.resolve(0).validate() {
            return err(&["scenario"], core_message(e));
        }
        let m = &self.matrix;
        if m.planners.is_empty() {
            return err(&["matrix", "planners"], "matrix.planners must not be empty".into());
        }
        if m.team_sizes.is_empty() {
            return err(&["matrix", "team_sizes"], "matrix.team_sizes must not be empty".into());
        }
        if let Some(&n) = m.team_sizes.iter().find(|&&n| n == 0) {
            return err(&["matrix", "team_sizes"], format!("team size {n} must be at least 1"));
        }
        if m.dropout.is_empty() {
            return err(&["matrix", "dropout"], "matrix.dropout must not be empty".into());
        }
        if let Some(&p) = m.dropout.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return err(&["matrix", "dropout"], format!("dropout {p} is outside [0, 1]"));
        }
        let cells = self.scenario.sets.len() * m.planners.len() * m.team_sizes.len() * m.dropout.len();
        if cells > u32::MAX as usize {
            return err(&["matrix"], "matrix has too many cells".into());
        }
        for kind in &m.planners {
            if let Err(e) = self.planner.config(*kind).validate() {
                return err(&["planner", kind.name()], core_message(e));
            }
        }
        let checks: [(&'static str, explore_core::Result<()>); 5] = [
            ("comms", self.comms.validate()),
            ("vehicle", self.vehicle.validate()),
            ("dwa", self.dwa.validate()),
            ("nav", self.nav.validate()),
            ("reward", self.reward.validate()),
        ];
        for (key, r) in checks {
            if let Err(e) = r {
                return err(&[key], core_message(e));
            }
        }
        Ok(())
    }

    /// Matrix cells in index order: sets, then planners, team sizes and
    /// dropout ratios, the last varying fastest.
    pub fn cells(&self) -> Vec<Cell> {
        let m = &self.matrix;
        let mut out = Vec::new();
        for set in 0..self.scenario.sets.len() {
            for &planner in &m.planners {
                for &team_size in &m.team_sizes {
                    for &dropout in &m.dropout {
                        out.push(Cell { index: out.len() as u32, set, planner, team_size, dropout });
                    }
                }
            }
        }
        out
    }

    /// Map seed of episode `index` in `cell`.
    pub fn map_seed(&self, cell: &Cell, index: usize) -> u64 {
        let s = &self.scenario.sets[cell.set];
        s.first_seed.wrapping_add(index as u64 % s.count)
    }

    pub fn episode_seed(&self, cell: &Cell, index: usize) -> u64 {
        explore_core::rng::episode_seed(self.master_seed, cell.index, index as u32)
    }

    /// Fully specified episode configuration for one episode of a cell.
    pub fn episode_config(&self, cell: &Cell, index: usize) -> EpisodeConfig {
        let mut cfg = EpisodeConfig::new(
            self.scenario.resolve(self.map_seed(cell, index)),
            self.planner.config(cell.planner),
            cell.team_size,
        );
        cfg.comms = CommsConfig { dropout_p: cell.dropout, ..self.comms };
        cfg.vehicle = self.vehicle;
        cfg.dwa = self.dwa.clone();
        cfg.nav = self.nav.clone();
        cfg.reward = self.reward.clone();
        cfg
    }

    /// The resolved configuration as TOML, every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes to TOML")
    }
}

fn core_message(e: explore_core::Error) -> String {
    match e {
        explore_core::Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn located(text: &str, file: &str, span: Range<usize>, message: String) -> HarnessError {
    let (line, column) = line_col(text, span.start);
    HarnessError::Config { file: file.to_string(), line, column, message }
}

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[start..].chars().count() + 1)
}

/// Span of the deepest key of `path` present in the document.
fn key_span(text: &str, path: &[&str]) -> Option<Range<usize>> {
    let doc = toml::de::DeTable::parse(text).ok()?;
    let mut table = doc.get_ref();
    let mut found = None;
    for key in path {
        let Some((k, v)) = table.get_key_value(*key) else { break };
        found = Some(k.span());
        match v.get_ref() {
            toml::de::DeValue::Table(t) => table = t,
            _ => break,
        }
    }
    found
}
