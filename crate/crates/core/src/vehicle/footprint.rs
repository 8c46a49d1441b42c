use crate::grid::{CellState, OccupancyGrid, Point};

/// True when a disc of radius `r` at `p` leaves the grid or touches an
/// obstacle cell (closed distance test against the cell square).
pub fn footprint_collides(grid: &OccupancyGrid, p: Point, r: f64) -> bool {
    let (w, h) = grid.extent();
    if p.x - r < 0.0 || p.y - r < 0.0 || p.x + r > w || p.y + r > h {
        return true;
    }
    let res = grid.resolution();
    let c0 = ((p.x - r) / res).floor().max(0.0) as usize;
    let c1 = (((p.x + r) / res).floor() as usize).min(grid.width() - 1);
    let r0 = ((p.y - r) / res).floor().max(0.0) as usize;
    let r1 = (((p.y + r) / res).floor() as usize).min(grid.height() - 1);
    for row in r0..=r1 {
        let y0 = row as f64 * res;
        let dy = (y0 - p.y).max(0.0).max(p.y - (y0 + res));
        for col in c0..=c1 {
            if grid.cell(col, row) != CellState::Obstacle {
                continue;
            }
            let x0 = col as f64 * res;
            let dx = (x0 - p.x).max(0.0).max(p.x - (x0 + res));
            if dx * dx + dy * dy <= r * r {
                return true;
            }
        }
    }
    false
}

/// Footprint check along the chord `a -> b`, sampled at most `spacing` apart.
/// `a` itself is not checked; `b` always is.
pub fn sweep_collides(grid: &OccupancyGrid, a: Point, b: Point, r: f64, spacing: f64) -> bool {
    let len = a.distance(b);
    let n = ((len / spacing).ceil() as usize).max(1);
    (1..=n).any(|k| {
        let t = k as f64 / n as f64;
        footprint_collides(grid, Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t), r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clearance_against_cell_squares() {
        let g = OccupancyGrid::from_ascii(".....\n.....\n..#..\n.....\n.....", 1.0).unwrap();
        // obstacle square is [2,3] x [2,3]
        assert!(!footprint_collides(&g, Point::new(1.5, 2.5), 0.4));
        assert!(footprint_collides(&g, Point::new(1.5, 2.5), 0.5));
        assert!(footprint_collides(&g, Point::new(2.5, 2.5), 0.1));
        // diagonal corner distance sqrt(0.5^2 + 0.5^2)
        assert!(!footprint_collides(&g, Point::new(1.5, 1.5), 0.7));
        assert!(footprint_collides(&g, Point::new(1.5, 1.5), 0.71));
        // leaving the grid counts as a collision
        assert!(footprint_collides(&g, Point::new(0.2, 1.5), 0.4));
    }

    #[test]
    fn sweep_catches_thin_walls() {
        let g = OccupancyGrid::from_ascii(".....\n..#..\n.....", 1.0).unwrap();
        assert!(sweep_collides(&g, Point::new(0.5, 1.5), Point::new(4.5, 1.5), 0.1, 0.25));
        assert!(!sweep_collides(&g, Point::new(0.5, 0.5), Point::new(4.5, 0.5), 0.4, 0.25));
    }
}
