//! SVG plots of a result directory: mean coverage curves with a one-std
//! band per cell, and trajectory overlays per episode.
//!
//! Coordinates are printed with three decimals and nothing time-dependent is
//! embedded, so plots are as reproducible as the logs they come from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use explore_core::sim::EpisodeLog;
use explore_core::world::build_world;
use explore_core::{CellState, OccupancyGrid};

use crate::dataset::{collect_log_paths, read_log};
use crate::error::{HarnessError, Result};

pub const PLOT_DIR: &str = "plots";

const AGENT_COLORS: [&str; 8] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Plot area of a coverage chart, in SVG user units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveFrame {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    /// Largest step index on the x axis.
    pub max_step: usize,
}

impl CurveFrame {
    pub fn new(max_step: usize) -> Self {
        Self { left: 60.0, top: 20.0, width: 600.0, height: 300.0, max_step }
    }

    pub fn x(&self, step: usize) -> f64 {
        self.left + self.width * step as f64 / self.max_step.max(1) as f64
    }

    pub fn y(&self, er: f64) -> f64 {
        self.top + self.height * (1.0 - er)
    }

    /// Inverse of [`CurveFrame::y`].
    pub fn er(&self, y: f64) -> f64 {
        1.0 - (y - self.top) / self.height
    }
}

/// Mean and population std per step; series that ended early hold their
/// last value.
pub fn coverage_band(series: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for k in 0..len {
        let mut v: Vec<f64> = series.iter().filter_map(|s| s.get(k).or(s.last()).copied()).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let mut sq: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
        sq.sort_by(f64::total_cmp);
        mean.push(m);
        std.push((sq.iter().sum::<f64>() / n).sqrt());
    }
    (mean, std)
}

fn points(it: impl Iterator<Item = (f64, f64)>) -> String {
    let v: Vec<String> = it.map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
    v.join(" ")
}

/// Coverage chart over the ER series of several episodes.
pub fn coverage_svg(title: &str, series: &[Vec<f64>]) -> String {
    let (mean, std) = coverage_band(series);
    let f = CurveFrame::new(mean.len().saturating_sub(1));
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="700" height="370" viewBox="0 0 700 370">"#);
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="700" height="370" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black"/>"#,
        f.left, f.top, f.width, f.height
    );
    for tick in 0..=4 {
        let er = tick as f64 / 4.0;
        let y = f.y(er);
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="end">{er:.2}</text>"#, f.left - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="12" text-anchor="middle">movement step (0 to {})</text>"#,
        f.left + f.width / 2.0,
        f.top + f.height + 30.0,
        f.max_step
    );
    let upper = mean.iter().zip(&std).enumerate().map(|(k, (m, d))| (f.x(k), f.y((m + d).min(1.0))));
    let lower = mean.iter().zip(&std).enumerate().rev().map(|(k, (m, d))| (f.x(k), f.y((m - d).max(0.0))));
    let _ = writeln!(s, r##"<polygon class="band" points="{}" fill="#1f77b4" fill-opacity="0.25" stroke="none"/>"##, points(upper.chain(lower)));
    let _ = writeln!(
        s,
        r##"<polyline class="mean" points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##,
        points(mean.iter().enumerate().map(|(k, m)| (f.x(k), f.y(*m))))
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Obstacles as one rect per horizontal run; the top of the image is the
/// highest grid row.
fn obstacle_rects(g: &OccupancyGrid, scale: f64, out: &mut String) {
    let h = g.height();
    for row in 0..h {
        let mut col = 0;
        while col < g.width() {
            if g.cell(col, row) != CellState::Obstacle {
                col += 1;
                continue;
            }
            let start = col;
            while col < g.width() && g.cell(col, row) == CellState::Obstacle {
                col += 1;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
                start as f64 * scale,
                (h - 1 - row) as f64 * scale,
                (col - start) as f64 * scale,
                scale
            );
        }
    }
}

/// Ground-truth map with every agent's path drawn over it.
pub fn trajectory_svg(log: &EpisodeLog, truth: &OccupancyGrid) -> String {
    let scale = 4.0;
    let (w_m, h_m) = truth.extent();
    let px = scale / truth.resolution();
    let (w, h) = (truth.width() as f64 * scale, truth.height() as f64 * scale);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#);
    let _ = writeln!(s, "<title>episode seed {}</title>", log.header.episode_seed);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w:.3}" height="{h:.3}" fill="white"/>"#);
    s.push_str("<g fill=\"#404040\">\n");
    obstacle_rects(truth, scale, &mut s);
    s.push_str("</g>\n");
    let to_svg = |x: f64, y: f64| (x.clamp(0.0, w_m) * px, (h_m - y.clamp(0.0, h_m)) * px);
    for agent in 0..log.n_agents() {
        let color = AGENT_COLORS[agent % AGENT_COLORS.len()];
        let path = std::iter::once(&log.header.initial_states[agent])
            .chain(log.steps.iter().map(|st| &st.states[agent]))
            .map(|a| to_svg(a.x, a.y));
        let _ = writeln!(
            s,
            r#"<polyline class="agent{agent}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points(path)
        );
        let a0 = log.header.initial_states[agent];
        let (x, y) = to_svg(a0.x, a0.y);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="{color}"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

/// Cell index parsed from a log name such as `c003_e0012.jsonl`.
fn cell_of(path: &Path) -> Option<u32> {
    let name = path.file_stem()?.to_str()?;
    name.strip_prefix('c')?.split('_').next()?.parse().ok()
}

/// Write coverage and trajectory plots for every log in a result directory.
pub fn emit_plots(result_dir: &Path) -> Result<Vec<PathBuf>> {
    let logs = collect_log_paths(result_dir)?;
    if logs.is_empty() {
        return Err(HarnessError::io(
            result_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no episode logs found"),
        ));
    }
    let out_dir = result_dir.join(PLOT_DIR);
    fs::create_dir_all(&out_dir).map_err(|e| HarnessError::io(&out_dir, e))?;
    let mut written = Vec::new();
    let mut by_cell: BTreeMap<u32, Vec<Vec<f64>>> = BTreeMap::new();
    for path in &logs {
        let log = read_log(path)?;
        let truth = build_world(&log.header.config.scenario)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("episode");
        let target = out_dir.join(format!("trajectory_{stem}.svg"));
        fs::write(&target, trajectory_svg(&log, &truth)).map_err(|e| HarnessError::io(&target, e))?;
        written.push(target);
        by_cell.entry(cell_of(path).unwrap_or(0)).or_default().push(log.er_series());
    }
    for (cell, series) in by_cell {
        let target = out_dir.join(format!("coverage_c{cell:03}.svg"));
        let title = format!("cell {cell}: mean exploration ratio over {} episodes", series.len());
        fs::write(&target, coverage_svg(&title, &series)).map_err(|e| HarnessError::io(&target, e))?;
        written.push(target);
    }
    written.sort();
    Ok(written)
}
