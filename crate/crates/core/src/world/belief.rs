use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ScanResult;
use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid};

/// Neighbourhood used to decide whether a free cell borders unknown space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontierConnectivity {
    #[default]
    Four,
    Eight,
}

/// Apply a scan to a belief. Obstacle observations are sticky: a cell once
/// seen as an obstacle never reverts to free.
pub fn integrate_scan(belief: &mut OccupancyGrid, scan: &ScanResult) -> Result<()> {
    if belief.width() != scan.width || belief.height() != scan.height {
        return Err(Error::GeometryMismatch(format!(
            "belief {}x{} vs scan {}x{}",
            belief.width(),
            belief.height(),
            scan.width,
            scan.height
        )));
    }
    for &c in &scan.freed_cells {
        if belief.get(c) == CellState::Unknown {
            belief.set(c, CellState::Free);
        }
    }
    for &c in &scan.obstacle_cells {
        belief.set(c, CellState::Obstacle);
    }
    Ok(())
}

/// Cell-wise join of `other` into `acc`.
pub fn merge_into(acc: &mut OccupancyGrid, other: &OccupancyGrid) -> Result<()> {
    acc.ensure_same_geometry(other)?;
    for i in 0..acc.len() {
        let joined = acc.get(i).max(other.get(i));
        acc.set(i, joined);
    }
    Ok(())
}

/// Join of a non-empty list of beliefs: known beats unknown, obstacle beats free.
pub fn merge_maps(beliefs: &[&OccupancyGrid]) -> Result<OccupancyGrid> {
    let (first, rest) = beliefs.split_first().ok_or_else(|| Error::domain("merge of an empty belief list"))?;
    let mut acc = (*first).clone();
    for b in rest {
        merge_into(&mut acc, b)?;
    }
    Ok(acc)
}

/// Free cells adjacent to at least one unknown cell, sorted by index.
pub fn detect_frontiers(belief: &OccupancyGrid, connectivity: FrontierConnectivity) -> Vec<usize> {
    (0..belief.len())
        .filter(|&i| belief.get(i) == CellState::Free)
        .filter(|&i| match connectivity {
            FrontierConnectivity::Four => belief.neighbors4(i).any(|n| belief.get(n) == CellState::Unknown),
            FrontierConnectivity::Eight => belief.neighbors8(i).any(|n| belief.get(n) == CellState::Unknown),
        })
        .collect()
}

/// 4-connected flood fill over free cells, sorted by index.
pub fn reachable_free_cells(truth: &OccupancyGrid, start: usize) -> Result<Vec<usize>> {
    if start >= truth.len() || truth.get(start) != CellState::Free {
        return Err(Error::domain(format!("flood fill start cell {start} is not free")));
    }
    let mut seen = vec![false; truth.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(c) = queue.pop_front() {
        for n in truth.neighbors4(c) {
            if !seen[n] && truth.get(n) == CellState::Free {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    Ok(seen.iter().enumerate().filter_map(|(i, &s)| s.then_some(i)).collect())
}

/// Fraction of `reachable` cells the belief knows.
pub fn exploration_ratio(belief: &OccupancyGrid, reachable: &[usize]) -> Result<f64> {
    if reachable.is_empty() {
        return Err(Error::domain("exploration ratio over an empty reachable set"));
    }
    let known = reachable.iter().filter(|&&c| belief.get(c).is_known()).count();
    Ok(known as f64 / reachable.len() as f64)
}
