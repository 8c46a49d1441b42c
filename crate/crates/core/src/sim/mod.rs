//! Episode engine, reward accounting and the replayable episode log.

mod engine;
mod log;
mod nav;
mod reward;

pub use engine::{run_episode, run_episode_observed, DecisionSnapshot, EpisodeConfig, EpisodeObserver, NoObserver};
pub use log::{DecisionRecord, EpisodeLog, LogHeader, LogRecord, OutcomeRecord, Replan, StepRecord, LOG_SCHEMA_VERSION};
pub use nav::{NavConfig, Navigator};
pub use reward::{check_termination, compute_step_rewards, RewardConfig, RewardWeights, StepReward, Termination};
