//! Built-in experiment presets, shipped as config text.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

const BASELINE: &str = r#"version = 1
name = "baseline-comparison"
master_seed = 2024
episodes = 50

[scenario]
kind = "maze"
sets = [{ name = "mazes", first_seed = 1000, count = 20 }]

[matrix]
planners = ["rrt", "mmpf", "voronoi"]
team_sizes = [3]
dropout = [0.0]
"#;

const DROPOUT: &str = r#"version = 1
name = "dropout-sweep"
master_seed = 2024
episodes = 50

[scenario]
kind = "maze"
sets = [{ name = "mazes", first_seed = 1000, count = 50 }]

[matrix]
planners = ["rrt"]
team_sizes = [3]
dropout = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
"#;

const SCALABILITY: &str = r#"version = 1
name = "scalability-sweep"
master_seed = 2024
episodes = 50

[scenario]
kind = "maze"
sets = [{ name = "mazes", first_seed = 1000, count = 50 }]

[matrix]
planners = ["rrt"]
team_sizes = [2, 3, 4, 5, 6]
dropout = [0.0]

[comms]
topology = { kind = "k_nearest", k = 2 }
"#;

const MULTI_MAZE: &str = r#"version = 1
name = "multi-maze"
master_seed = 2024
episodes = 50

[scenario]
kind = "maze"
sets = [
    { name = "train", first_seed = 1000, count = 70 },
    { name = "test", first_seed = 5000, count = 10 },
]

[matrix]
planners = ["rrt", "mmpf", "voronoi"]
team_sizes = [3]
dropout = [0.0]
"#;

pub const PRESET_NAMES: [&str; 4] = ["baseline-comparison", "dropout-sweep", "scalability-sweep", "multi-maze"];

/// Config text of a preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "baseline-comparison" => Some(BASELINE),
        "dropout-sweep" => Some(DROPOUT),
        "scalability-sweep" => Some(SCALABILITY),
        "multi-maze" => Some(MULTI_MAZE),
        _ => None,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = preset_text(name).ok_or_else(|| {
        HarnessError::Invalid(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))
    })?;
    ExperimentConfig::parse(text, &format!("<preset {name}>"))
}
