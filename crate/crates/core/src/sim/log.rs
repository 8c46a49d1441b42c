//! Episode log: one JSON record per line, header first and outcome last.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::engine::EpisodeConfig;
use super::reward::{StepReward, Termination};
use crate::comms::Delivery;
use crate::error::{Error, Result};
use crate::grid::Point;
use crate::vehicle::{AgentState, ControlInput};

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema_version: u32,
    pub config: EpisodeConfig,
    pub episode_seed: u64,
    /// Free cells reachable from the spawn area; the exploration ratio denominator.
    pub reachable_cells: usize,
    pub initial_states: Vec<AgentState>,
    /// Reachable cells the team knows after the initial scan.
    pub initial_known: usize,
    pub initial_er: f64,
}

/// One movement step of the whole team.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub decision: usize,
    /// Movement steps elapsed, counting this one.
    pub step: usize,
    pub states: Vec<AgentState>,
    pub controls: Vec<ControlInput>,
    pub collisions: Vec<bool>,
    /// Goals re-planned before this step's move by agents that had arrived.
    pub replans: Vec<Replan>,
    pub er: f64,
}

/// A goal chosen between decisions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replan {
    pub agent: usize,
    pub goal: Option<Point>,
}

/// One planning round, written after its movement steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    /// 1-based decision number.
    pub decision: usize,
    /// Goal per agent; `None` when the agent saw no frontier.
    pub goals: Vec<Option<Point>>,
    pub deliveries: Vec<Delivery>,
    pub rewards: Vec<StepReward>,
    /// Reachable cells first known to the team during this round, ascending.
    pub newly_known: Vec<usize>,
    pub er: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub status: Termination,
    pub decisions: usize,
    pub steps: usize,
    pub final_er: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Header(LogHeader),
    Step(StepRecord),
    Decision(DecisionRecord),
    Outcome(OutcomeRecord),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub steps: Vec<StepRecord>,
    pub decisions: Vec<DecisionRecord>,
    pub outcome: OutcomeRecord,
}

impl EpisodeLog {
    /// Team exploration ratio after each movement step, with the initial
    /// ratio at index 0.
    pub fn er_series(&self) -> Vec<f64> {
        std::iter::once(self.header.initial_er).chain(self.steps.iter().map(|s| s.er)).collect()
    }

    pub fn n_agents(&self) -> usize {
        self.header.initial_states.len()
    }

    /// Records in file order: header, then each round's steps followed by its
    /// decision record, then the outcome.
    pub fn records(&self) -> Vec<LogRecord> {
        let mut out = vec![LogRecord::Header(self.header.clone())];
        let mut steps = self.steps.iter().peekable();
        for d in &self.decisions {
            while let Some(s) = steps.next_if(|s| s.decision == d.decision) {
                out.push(LogRecord::Step(s.clone()));
            }
            out.push(LogRecord::Decision(d.clone()));
        }
        out.extend(steps.cloned().map(LogRecord::Step));
        out.push(LogRecord::Outcome(self.outcome.clone()));
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in self.records() {
            serde_json::to_writer(&mut w, &r).map_err(|e| Error::Parse(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut decisions = Vec::new();
        let mut outcome = None;
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LogRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse(format!("log line {}: {e}", k + 1)))?;
            match rec {
                LogRecord::Header(h) if header.is_none() && k == 0 => header = Some(h),
                LogRecord::Header(_) => return Err(Error::Parse(format!("log line {}: unexpected header", k + 1))),
                _ if header.is_none() => return Err(Error::Parse("log does not start with a header".into())),
                _ if outcome.is_some() => return Err(Error::Parse(format!("log line {}: record after outcome", k + 1))),
                LogRecord::Step(s) => steps.push(s),
                LogRecord::Decision(d) => decisions.push(d),
                LogRecord::Outcome(o) => outcome = Some(o),
            }
        }
        let header = header.ok_or_else(|| Error::Parse("empty log".into()))?;
        if header.schema_version != LOG_SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported log schema version {}", header.schema_version)));
        }
        let outcome = outcome.ok_or_else(|| Error::Parse("log has no outcome record".into()))?;
        Ok(Self { header, steps, decisions, outcome })
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::read_jsonl(text.as_bytes())
    }
}
