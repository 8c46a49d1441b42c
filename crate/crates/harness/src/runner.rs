//! Parallel batch execution of an experiment and the result directory it
//! produces.
//!
//! Episodes run on a rayon pool. Every file is written afterwards by the
//! calling thread, in cell and episode order, so the output bytes do not
//! depend on the worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use explore_core::metrics::{aggregate, csv_columns, csv_fields, episode_metrics, markdown_table, AggregateRow, EpisodeMetrics};
use explore_core::sim::{run_episode, Termination, LOG_SCHEMA_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Cell, ExperimentConfig, CONFIG_VERSION};
use crate::error::{HarnessError, Result};

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "MREXPLORE_WORKERS";

pub const EPISODES_CSV: &str = "episodes.csv";
pub const SUMMARY_MD: &str = "summary.md";
pub const CONFIG_TOML: &str = "config.toml";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const LOG_DIR: &str = "logs";

/// Log file name of an episode, relative to the result directory.
pub fn log_path(cell: u32, episode: usize) -> String {
    format!("{LOG_DIR}/c{cell:03}_e{episode:04}.jsonl")
}

/// Worker count: the environment override, then the config, then the
/// machine's available parallelism.
pub fn resolve_workers(cfg: &ExperimentConfig) -> Result<usize> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(HarnessError::Invalid(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        };
    }
    Ok(cfg.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

/// Result of one episode as kept for the writer phase.
#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub cell: u32,
    pub episode: usize,
    pub map_seed: u64,
    pub episode_seed: u64,
    pub outcome: std::result::Result<Finished, String>,
}

#[derive(Clone, Debug)]
pub struct Finished {
    pub status: Termination,
    pub decisions: usize,
    pub steps: usize,
    pub metrics: EpisodeMetrics,
    /// Serialized log, kept only when logs are written.
    pub log: Option<String>,
}

fn run_one(cfg: &ExperimentConfig, cell: &Cell, episode: usize) -> EpisodeResult {
    let ecfg = cfg.episode_config(cell, episode);
    let seed = cfg.episode_seed(cell, episode);
    let outcome = run_episode(&ecfg, seed)
        .and_then(|log| {
            let metrics = episode_metrics(&log, &cfg.thresholds)?;
            Ok(Finished {
                status: log.outcome.status,
                decisions: log.outcome.decisions,
                steps: log.outcome.steps,
                metrics,
                log: cfg.write_logs.then(|| log.to_jsonl()),
            })
        })
        .map_err(|e| e.to_string());
    EpisodeResult { cell: cell.index, episode, map_seed: ecfg.scenario.seed, episode_seed: seed, outcome }
}

/// Run every episode of the matrix on `workers` threads, in index order.
pub fn execute(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<EpisodeResult>> {
    let cells = cfg.cells();
    let jobs: Vec<(&Cell, usize)> = cells.iter().flat_map(|c| (0..cfg.episodes).map(move |i| (c, i))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(|&(c, i)| run_one(cfg, c, i)).collect()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestError {
    pub episode: usize,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestCell {
    pub index: u32,
    pub set: String,
    pub planner: String,
    pub team_size: usize,
    pub dropout: f64,
    pub episodes: usize,
    pub failed: usize,
    /// `"ok"` or `"failed"`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<ManifestError>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub harness_version: String,
    pub config_version: u32,
    pub log_schema_version: u32,
    pub master_seed: u64,
    pub episodes_per_cell: usize,
    pub cells: Vec<ManifestCell>,
    /// Every other file in the result directory, sorted by path.
    pub files: Vec<ManifestFile>,
}

/// What a finished run reports back.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    /// Aggregate per cell; `None` when every episode of the cell failed.
    pub rows: Vec<(Cell, Option<AggregateRow>)>,
}

impl RunReport {
    pub fn failed_episodes(&self) -> usize {
        self.manifest.cells.iter().map(|c| c.failed).sum()
    }
}

/// Run an experiment and write its result directory.
///
/// Returns [`HarnessError::EpisodesFailed`] after writing everything when
/// any episode failed.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<RunReport> {
    cfg.check()?;
    let results = execute(cfg, workers)?;
    let report = write_results(cfg, out_dir, &results)?;
    let failed = report.failed_episodes();
    if failed > 0 {
        return Err(HarnessError::EpisodesFailed { failed, total: results.len() });
    }
    Ok(report)
}

fn write_file(root: &Path, rel: &str, bytes: &[u8], files: &mut BTreeMap<String, ManifestFile>) -> Result<()> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
    files.insert(
        rel.to_string(),
        ManifestFile { path: rel.to_string(), bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(bytes)) },
    );
    Ok(())
}

fn status_name(s: Termination) -> &'static str {
    match s {
        Termination::Success => "success",
        Termination::Timeout => "timeout",
        Termination::Continue => "running",
    }
}

fn episodes_csv(cfg: &ExperimentConfig, cells: &[Cell], results: &[EpisodeResult]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["cell", "set", "planner", "team_size", "dropout", "episode", "map_seed", "episode_seed", "status", "decisions", "steps"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend(csv_columns(&cfg.thresholds));
    let csv_err = |e: csv::Error| HarnessError::Invalid(format!("csv encoding failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    let metric_cols = header.len() - 11;
    for r in results {
        let c = &cells[r.cell as usize];
        let mut row = vec![
            c.index.to_string(),
            cfg.scenario.sets[c.set].name.clone(),
            c.planner.name().to_string(),
            c.team_size.to_string(),
            format!("{}", c.dropout),
            r.episode.to_string(),
            r.map_seed.to_string(),
            r.episode_seed.to_string(),
        ];
        match &r.outcome {
            Ok(f) => {
                row.extend([status_name(f.status).to_string(), f.decisions.to_string(), f.steps.to_string()]);
                row.extend(csv_fields(&f.metrics));
            }
            Err(_) => {
                row.extend(["failed".to_string(), String::new(), String::new()]);
                row.extend(std::iter::repeat(String::new()).take(metric_cols));
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Invalid(format!("csv encoding failed: {e}")))
}

/// Row label title and per-cell labels for the cells of one scenario set.
fn row_labels(cfg: &ExperimentConfig, cells: &[&Cell]) -> (&'static str, Vec<String>) {
    let m = &cfg.matrix;
    let varies = [m.planners.len() > 1, m.team_sizes.len() > 1, m.dropout.len() > 1];
    match varies {
        [_, false, false] => ("Method", cells.iter().map(|c| c.planner.display().to_string()).collect()),
        [false, true, false] => ("Team Size", cells.iter().map(|c| c.team_size.to_string()).collect()),
        [false, false, true] => ("Dropout Ratio", cells.iter().map(|c| format!("{}", c.dropout)).collect()),
        _ => (
            "Cell",
            cells.iter().map(|c| format!("{}, n={}, p={}", c.planner.display(), c.team_size, c.dropout)).collect(),
        ),
    }
}

fn summary_md(cfg: &ExperimentConfig, rows: &[(Cell, Option<AggregateRow>)]) -> String {
    let mut out = format!("# {}\n\n", cfg.name);
    let _ = writeln!(out, "Episodes per cell: {}. Master seed: {}.\n", cfg.episodes, cfg.master_seed);
    for (k, set) in cfg.scenario.sets.iter().enumerate() {
        let last = set.first_seed.wrapping_add(set.count - 1);
        let _ = writeln!(out, "## {} (map seeds {}..={})\n", set.name, set.first_seed, last);
        let in_set: Vec<&(Cell, Option<AggregateRow>)> = rows.iter().filter(|(c, _)| c.set == k).collect();
        let cells: Vec<&Cell> = in_set.iter().map(|(c, _)| c).collect();
        let (title, labels) = row_labels(cfg, &cells);
        let mut table_rows = Vec::new();
        let mut failed = Vec::new();
        for ((_, agg), label) in in_set.iter().zip(labels) {
            match agg {
                Some(a) => table_rows.push((label, a.clone())),
                None => failed.push(label),
            }
        }
        if !table_rows.is_empty() {
            out.push_str(&markdown_table(title, &table_rows, &cfg.thresholds));
        }
        for label in failed {
            let _ = writeln!(out, "\n{title} {label}: every episode failed.");
        }
        out.push('\n');
    }
    out
}

/// Writer phase: logs, CSV, summary, resolved config and manifest.
pub fn write_results(cfg: &ExperimentConfig, out_dir: &Path, results: &[EpisodeResult]) -> Result<RunReport> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let cells = cfg.cells();
    let mut files = BTreeMap::new();

    for r in results {
        if let Ok(Finished { log: Some(text), .. }) = &r.outcome {
            write_file(out_dir, &log_path(r.cell, r.episode), text.as_bytes(), &mut files)?;
        }
    }
    write_file(out_dir, EPISODES_CSV, &episodes_csv(cfg, &cells, results)?, &mut files)?;

    let mut rows = Vec::with_capacity(cells.len());
    let mut manifest_cells = Vec::with_capacity(cells.len());
    for c in &cells {
        let mine: Vec<&EpisodeResult> = results.iter().filter(|r| r.cell == c.index).collect();
        let ok: Vec<EpisodeMetrics> =
            mine.iter().filter_map(|r| r.outcome.as_ref().ok()).map(|f| f.metrics.clone()).collect();
        let errors: Vec<ManifestError> = mine
            .iter()
            .filter_map(|r| r.outcome.as_ref().err().map(|m| ManifestError { episode: r.episode, message: m.clone() }))
            .collect();
        let agg = if ok.is_empty() { None } else { Some(aggregate(&ok, &cfg.thresholds)?) };
        manifest_cells.push(ManifestCell {
            index: c.index,
            set: cfg.scenario.sets[c.set].name.clone(),
            planner: c.planner.name().to_string(),
            team_size: c.team_size,
            dropout: c.dropout,
            episodes: mine.len(),
            failed: errors.len(),
            status: if errors.is_empty() { "ok" } else { "failed" }.to_string(),
            errors,
        });
        rows.push((c.clone(), agg));
    }
    write_file(out_dir, SUMMARY_MD, summary_md(cfg, &rows).as_bytes(), &mut files)?;
    write_file(out_dir, CONFIG_TOML, cfg.to_toml().as_bytes(), &mut files)?;

    let manifest = Manifest {
        name: cfg.name.clone(),
        harness_version: env!("CARGO_PKG_VERSION").to_string(),
        config_version: CONFIG_VERSION,
        log_schema_version: LOG_SCHEMA_VERSION,
        master_seed: cfg.master_seed,
        episodes_per_cell: cfg.episodes,
        cells: manifest_cells,
        files: files.into_values().collect(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let path = out_dir.join(MANIFEST_JSON);
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(RunReport { out_dir: out_dir.to_path_buf(), manifest, rows })
}
