//! Re-run a logged episode from its header and compare.

use std::path::Path;

use explore_core::sim::{run_episode, EpisodeLog};

use crate::dataset::read_log;
use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplayReport {
    pub logged_er: f64,
    pub replayed_er: f64,
    pub decisions: usize,
    pub steps: usize,
}

/// Replay a log in memory. Any difference, not only in the final ratio, is
/// a mismatch.
pub fn replay_log(log: &EpisodeLog) -> Result<ReplayReport> {
    let again = run_episode(&log.header.config, log.header.episode_seed)?;
    let report = ReplayReport {
        logged_er: log.outcome.final_er,
        replayed_er: again.outcome.final_er,
        decisions: again.outcome.decisions,
        steps: again.outcome.steps,
    };
    if report.logged_er.to_bits() != report.replayed_er.to_bits() {
        return Err(HarnessError::ReplayMismatch(format!(
            "final ER {} was logged, replay gives {}",
            report.logged_er, report.replayed_er
        )));
    }
    if again != *log {
        let first = log.steps.iter().zip(&again.steps).position(|(a, b)| a != b);
        let at = first.map_or_else(|| "record counts differ".to_string(), |k| format!("first differing step {}", k + 1));
        return Err(HarnessError::ReplayMismatch(format!("trajectory differs: {at}")));
    }
    Ok(report)
}

pub fn replay_file(path: &Path) -> Result<ReplayReport> {
    replay_log(&read_log(path)?)
}
