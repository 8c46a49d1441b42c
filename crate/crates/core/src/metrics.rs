//! Per-episode and aggregate evaluation metrics.
//!
//! Aggregates use population statistics. Sums run over the values sorted
//! with `f64::total_cmp`, so an aggregate does not depend on the order in
//! which episodes arrive.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::EpisodeLog;

/// Coverage thresholds reported by default.
pub const DEFAULT_THRESHOLDS: [f64; 2] = [0.85, 0.95];

/// Cell text for a statistic over zero episodes.
pub const ABSENT_CELL: &str = "- (-)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub threshold: f64,
    /// Movement steps elapsed when the team ratio first reached the threshold.
    pub cs: Option<usize>,
    /// Team path length in meters at that step.
    pub pl: Option<f64>,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub er: f64,
    pub thresholds: Vec<ThresholdMetrics>,
    /// Cumulative combined reward per agent.
    pub agent_rewards: Vec<f64>,
    /// Population variance of `agent_rewards`.
    pub rv: f64,
}

impl EpisodeMetrics {
    pub fn at(&self, threshold: f64) -> Option<&ThresholdMetrics> {
        self.thresholds.iter().find(|t| t.threshold == threshold)
    }
}

fn validate_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::config("at least one coverage threshold is required"));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::config(format!("coverage threshold {t} outside (0, 1]")));
    }
    Ok(())
}

/// Sum of `values` in ascending order.
fn sorted_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Population mean and standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = sorted_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (sorted_sum(&sq) / n).sqrt())
}

fn population_variance(values: &[f64]) -> f64 {
    let (_, std) = mean_std(values);
    std * std
}

pub fn episode_metrics(log: &EpisodeLog, thresholds: &[f64]) -> Result<EpisodeMetrics> {
    validate_thresholds(thresholds)?;
    let n = log.n_agents();
    if n == 0 {
        return Err(Error::Parse("log header lists no agents".into()));
    }
    if let Some(s) = log.steps.iter().find(|s| s.states.len() != n) {
        return Err(Error::Parse(format!("step {} holds {} states for {n} agents", s.step, s.states.len())));
    }
    if let Some(d) = log.decisions.iter().find(|d| d.rewards.len() != n) {
        return Err(Error::Parse(format!("decision {} holds {} rewards for {n} agents", d.decision, d.rewards.len())));
    }

    // cumulative team path length after k steps
    let mut team_pl = Vec::with_capacity(log.steps.len() + 1);
    team_pl.push(0.0);
    let mut per_agent = vec![0.0; n];
    let mut prev = &log.header.initial_states;
    for s in &log.steps {
        for (acc, (a, b)) in per_agent.iter_mut().zip(prev.iter().zip(&s.states)) {
            *acc += a.position().distance(b.position());
        }
        team_pl.push(sorted_sum(&per_agent));
        prev = &s.states;
    }

    let series = log.er_series();
    let per_threshold = thresholds
        .iter()
        .map(|&threshold| {
            let cs = series.iter().position(|&e| e >= threshold);
            ThresholdMetrics { threshold, cs, pl: cs.map(|k| team_pl[k]), success: cs.is_some() }
        })
        .collect();

    let agent_rewards: Vec<f64> = (0..n)
        .map(|i| {
            let r: Vec<f64> = log.decisions.iter().map(|d| d.rewards[i].combined).collect();
            r.iter().sum()
        })
        .collect();
    Ok(EpisodeMetrics {
        er: log.outcome.final_er,
        thresholds: per_threshold,
        rv: population_variance(&agent_rewards),
        agent_rewards,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let (mean, std) = mean_std(values);
        Some(Self { mean, std, count: values.len() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAggregate {
    pub threshold: f64,
    /// Over the episodes that reached the threshold only.
    pub cs: Option<Stat>,
    pub pl: Option<Stat>,
    /// Percentage of episodes that reached the threshold.
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub episodes: usize,
    pub er: Stat,
    pub rv: Stat,
    pub thresholds: Vec<ThresholdAggregate>,
}

impl AggregateRow {
    pub fn at(&self, threshold: f64) -> Option<&ThresholdAggregate> {
        self.thresholds.iter().find(|t| t.threshold == threshold)
    }
}

pub fn aggregate(rows: &[EpisodeMetrics], thresholds: &[f64]) -> Result<AggregateRow> {
    validate_thresholds(thresholds)?;
    if rows.is_empty() {
        return Err(Error::domain("cannot aggregate zero episodes"));
    }
    let er: Vec<f64> = rows.iter().map(|r| r.er).collect();
    let rv: Vec<f64> = rows.iter().map(|r| r.rv).collect();
    let per_threshold = thresholds
        .iter()
        .map(|&t| {
            let hits: Vec<&ThresholdMetrics> = rows
                .iter()
                .map(|r| r.at(t).ok_or_else(|| Error::domain(format!("episode lacks threshold {t}"))))
                .collect::<Result<_>>()?;
            let cs: Vec<f64> = hits.iter().filter_map(|h| h.cs).map(|c| c as f64).collect();
            let pl: Vec<f64> = hits.iter().filter_map(|h| h.pl).collect();
            let successes = hits.iter().filter(|h| h.success).count();
            Ok(ThresholdAggregate {
                threshold: t,
                cs: Stat::of(&cs),
                pl: Stat::of(&pl),
                success_rate: 100.0 * successes as f64 / rows.len() as f64,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AggregateRow {
        episodes: rows.len(),
        er: Stat::of(&er).expect("non-empty"),
        rv: Stat::of(&rv).expect("non-empty"),
        thresholds: per_threshold,
    })
}

/// `0.85` -> `"85"`, `0.825` -> `"82.5"`.
pub fn threshold_label(t: f64) -> String {
    let pct = (t * 1e6).round() / 1e4;
    format!("{pct}")
}

/// `"92.44% (4.70%)"` for a ratio statistic.
pub fn format_percent_stat(s: Option<Stat>) -> String {
    s.map_or_else(|| ABSENT_CELL.to_string(), |s| format!("{:.2}% ({:.2}%)", 100.0 * s.mean, 100.0 * s.std))
}

/// `"379 (88)"` for step and length statistics.
pub fn format_integer_stat(s: Option<Stat>) -> String {
    s.map_or_else(|| ABSENT_CELL.to_string(), |s| format!("{:.0} ({:.0})", s.mean, s.std))
}

/// `"1.81 (1.06)"` for reward variance.
pub fn format_decimal_stat(s: Option<Stat>) -> String {
    s.map_or_else(|| ABSENT_CELL.to_string(), |s| format!("{:.2} ({:.2})", s.mean, s.std))
}

fn ascending(thresholds: &[f64]) -> Vec<f64> {
    let mut t = thresholds.to_vec();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Column titles after the label column: ER, CS and PL per threshold in
/// ascending order, RV, then SR per threshold in descending order.
pub fn table_columns(thresholds: &[f64]) -> Vec<String> {
    let t = ascending(thresholds);
    let mut cols = vec!["ER".to_string()];
    cols.extend(t.iter().map(|&x| format!("{}%CS", threshold_label(x))));
    cols.extend(t.iter().map(|&x| format!("{}%PL", threshold_label(x))));
    cols.push("RV".into());
    cols.extend(t.iter().rev().map(|&x| format!("{}%SR", threshold_label(x))));
    cols
}

/// Rendered cells of one table row, aligned with [`table_columns`].
pub fn table_cells(row: &AggregateRow) -> Vec<String> {
    let t = ascending(&row.thresholds.iter().map(|x| x.threshold).collect::<Vec<_>>());
    let at = |x: f64| row.at(x).expect("threshold taken from the row");
    let mut cells = vec![format_percent_stat(Some(row.er))];
    cells.extend(t.iter().map(|&x| format_integer_stat(at(x).cs)));
    cells.extend(t.iter().map(|&x| format_integer_stat(at(x).pl)));
    cells.push(format_decimal_stat(Some(row.rv)));
    cells.extend(t.iter().rev().map(|&x| format!("{:.2}%", at(x).success_rate)));
    cells
}

/// Markdown table with one line per labelled row.
pub fn markdown_table(label_title: &str, rows: &[(String, AggregateRow)], thresholds: &[f64]) -> String {
    let cols = table_columns(thresholds);
    let mut out = String::new();
    let _ = writeln!(out, "| {} | {} |", label_title, cols.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(cols.len() + 1));
    for (label, row) in rows {
        let _ = writeln!(out, "| {} | {} |", label, table_cells(row).join(" | "));
    }
    out
}

/// CSV header for the metric fields of an episode row.
pub fn csv_columns(thresholds: &[f64]) -> Vec<String> {
    let mut cols = vec!["er".to_string(), "rv".to_string()];
    for &t in thresholds {
        let l = threshold_label(t);
        cols.push(format!("cs_{l}"));
        cols.push(format!("pl_{l}"));
        cols.push(format!("success_{l}"));
    }
    cols
}

/// CSV fields aligned with [`csv_columns`]; absent values are empty.
/// Floats use the shortest representation that parses back exactly.
pub fn csv_fields(m: &EpisodeMetrics) -> Vec<String> {
    let mut f = vec![format!("{}", m.er), format!("{}", m.rv)];
    for t in &m.thresholds {
        f.push(t.cs.map(|c| c.to_string()).unwrap_or_default());
        f.push(t.pl.map(|p| format!("{p}")).unwrap_or_default());
        f.push(t.success.to_string());
    }
    f
}
