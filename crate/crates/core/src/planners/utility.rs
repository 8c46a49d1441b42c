use crate::grid::{CellState, OccupancyGrid, Point};

/// Unknown cells whose centers lie within `radius` of `c`.
pub fn info_gain(belief: &OccupancyGrid, c: Point, radius: f64) -> usize {
    let res = belief.resolution();
    let lo = |v: f64| ((v - radius) / res - 0.5).ceil().max(0.0) as usize;
    let hi = |v: f64, n: usize| (((v + radius) / res - 0.5).floor().max(-1.0) as i64).min(n as i64 - 1);
    let r2 = radius * radius;
    let mut count = 0;
    let (c_hi, r_hi) = (hi(c.x, belief.width()), hi(c.y, belief.height()));
    if c_hi < 0 || r_hi < 0 {
        return 0;
    }
    for row in lo(c.y)..=r_hi as usize {
        let dy = (row as f64 + 0.5) * res - c.y;
        for col in lo(c.x)..=c_hi as usize {
            let dx = (col as f64 + 0.5) * res - c.x;
            if dx * dx + dy * dy <= r2 && belief.cell(col, row) == CellState::Unknown {
                count += 1;
            }
        }
    }
    count
}

/// Min-max scaling to `[0, 1]`. When all values are equal every normalised
/// value is `0`.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

/// Index maximising `IG_norm - N_norm`, first index on ties. `None` for empty input.
pub fn select_by_utility(gains: &[f64], costs: &[f64]) -> Option<(usize, f64)> {
    let ig = min_max_normalize(gains);
    let n = min_max_normalize(costs);
    let mut best: Option<(usize, f64)> = None;
    for (i, (g, c)) in ig.iter().zip(&n).enumerate() {
        let u = g - c;
        if best.map_or(true, |(_, b)| u > b) {
            best = Some((i, u));
        }
    }
    best
}
