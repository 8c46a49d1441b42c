//! Occupancy grid with ternary cell state.
//!
//! World frame: the origin is the lower-left corner of cell `(0, 0)`, `x` grows
//! with the column and `y` with the row. Cells are stored row-major.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"OGRD";
const FORMAT_VERSION: u16 = 1;

/// Per-cell knowledge. The discriminants order the states as a join
/// semilattice: `Unknown < Free < Obstacle`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    Unknown = 0,
    Free = 1,
    Obstacle = 2,
}

impl CellState {
    pub fn is_known(self) -> bool {
        self != CellState::Unknown
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(CellState::Unknown),
            1 => Some(CellState::Free),
            2 => Some(CellState::Obstacle),
            _ => None,
        }
    }
}

/// A world-frame point in meters.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, fill: CellState) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config(format!("grid dimensions must be positive, got {width}x{height}")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::config(format!("resolution must be positive, got {resolution}")));
        }
        Ok(Self { width, height, resolution, cells: vec![fill; width * height] })
    }

    pub fn unknown_like(other: &OccupancyGrid) -> Self {
        Self {
            width: other.width,
            height: other.height,
            resolution: other.resolution,
            cells: vec![CellState::Unknown; other.cells.len()],
        }
    }

    pub fn from_cells(width: usize, height: usize, resolution: f64, cells: Vec<CellState>) -> Result<Self> {
        let mut grid = Self::new(width, height, resolution, CellState::Unknown)?;
        if cells.len() != width * height {
            return Err(Error::config(format!(
                "expected {} cells for a {width}x{height} grid, got {}",
                width * height,
                cells.len()
            )));
        }
        grid.cells = cells;
        Ok(grid)
    }

    /// Parse an ASCII picture: `#` obstacle, `.` free, `?` unknown. The first
    /// line is the top row (highest `y`).
    pub fn from_ascii(picture: &str, resolution: f64) -> Result<Self> {
        let rows: Vec<&str> = picture.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut grid = Self::new(width, height, resolution, CellState::Unknown)?;
        for (k, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::Parse(format!("ragged row {k} in grid picture")));
            }
            let row = height - 1 - k;
            for (col, ch) in line.chars().enumerate() {
                let state = match ch {
                    '#' => CellState::Obstacle,
                    '.' => CellState::Free,
                    '?' => CellState::Unknown,
                    other => return Err(Error::Parse(format!("unexpected character {other:?} in grid picture"))),
                };
                grid.set_cell(col, row, state);
            }
        }
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    /// Extent of the grid in meters along `x` and `y`.
    pub fn extent(&self) -> (f64, f64) {
        (self.width as f64 * self.resolution, self.height as f64 * self.resolution)
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        debug_assert!(col < self.width && row < self.height);
        row * self.width + col
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn get(&self, index: usize) -> CellState {
        self.cells[index]
    }

    pub fn cell(&self, col: usize, row: usize) -> CellState {
        self.cells[self.index(col, row)]
    }

    pub fn set(&mut self, index: usize, state: CellState) {
        self.cells[index] = state;
    }

    pub fn set_cell(&mut self, col: usize, row: usize, state: CellState) {
        let i = self.index(col, row);
        self.cells[i] = state;
    }

    pub fn fill(&mut self, state: CellState) {
        self.cells.fill(state);
    }

    pub fn cell_center(&self, index: usize) -> Point {
        let (col, row) = self.coords(index);
        Point::new((col as f64 + 0.5) * self.resolution, (row as f64 + 0.5) * self.resolution)
    }

    /// True when `p` lies in the half-open extent `[0, W) x [0, H)`.
    pub fn contains(&self, p: Point) -> bool {
        let (w, h) = self.extent();
        p.x >= 0.0 && p.y >= 0.0 && p.x < w && p.y < h
    }

    pub fn cell_of(&self, p: Point) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let col = ((p.x / self.resolution).floor() as usize).min(self.width - 1);
        let row = ((p.y / self.resolution).floor() as usize).min(self.height - 1);
        Some(self.index(col, row))
    }

    /// 4-neighbours of a cell inside the grid.
    pub fn neighbors4(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (col, row) = self.coords(index);
        let w = self.width;
        let h = self.height;
        [
            (col > 0).then(|| index - 1),
            (col + 1 < w).then(|| index + 1),
            (row > 0).then(|| index - w),
            (row + 1 < h).then(|| index + w),
        ]
        .into_iter()
        .flatten()
    }

    /// 8-neighbours of a cell inside the grid, in row-major order.
    pub fn neighbors8(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (col, row) = self.coords(index);
        let (col, row) = (col as i64, row as i64);
        let (w, h) = (self.width as i64, self.height as i64);
        (-1..=1i64)
            .flat_map(move |dr| (-1..=1i64).map(move |dc| (dc, dr)))
            .filter(|&(dc, dr)| dc != 0 || dr != 0)
            .filter_map(move |(dc, dr)| {
                let (c, r) = (col + dc, row + dr);
                (c >= 0 && r >= 0 && c < w && r < h).then(|| (r * w + c) as usize)
            })
    }

    pub fn same_geometry(&self, other: &OccupancyGrid) -> bool {
        self.width == other.width && self.height == other.height && self.resolution == other.resolution
    }

    pub fn ensure_same_geometry(&self, other: &OccupancyGrid) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{}x{}@{} vs {}x{}@{}",
                self.width, self.height, self.resolution, other.width, other.height, other.resolution
            )))
        }
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_known()).count()
    }

    /// Portable binary form: magic, version, width, height, resolution, then
    /// one byte per cell in row-major order. Integers and floats little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(22 + self.cells.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&self.resolution.to_le_bytes());
        out.extend(self.cells.iter().map(|&c| c as u8));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = 4 + 2 + 4 + 4 + 8;
        if bytes.len() < header || &bytes[..4] != MAGIC {
            return Err(Error::Parse("not an occupancy grid file".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported grid format version {version}")));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let width = word(6);
        let height = word(10);
        let resolution = f64::from_le_bytes(bytes[14..22].try_into().unwrap());
        let body = &bytes[header..];
        if body.len() != width * height {
            return Err(Error::Parse(format!("expected {} cell bytes, found {}", width * height, body.len())));
        }
        let cells = body
            .iter()
            .map(|&b| CellState::from_byte(b).ok_or_else(|| Error::Parse(format!("invalid cell byte {b}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_cells(width, height, resolution, cells)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    /// Binary PGM (P5). Unknown is mid-grey, free white, obstacle black; the
    /// top image row is the highest grid row.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                out.push(match self.cell(col, row) {
                    CellState::Unknown => 128,
                    CellState::Free => 255,
                    CellState::Obstacle => 0,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_geometry() {
        assert!(OccupancyGrid::new(0, 3, 1.0, CellState::Free).is_err());
        assert!(OccupancyGrid::new(3, 3, 0.0, CellState::Free).is_err());
        assert!(OccupancyGrid::from_cells(2, 2, 1.0, vec![CellState::Free; 3]).is_err());
    }

    #[test]
    fn point_to_cell_mapping() {
        let g = OccupancyGrid::new(10, 5, 0.5, CellState::Free).unwrap();
        assert_eq!(g.extent(), (5.0, 2.5));
        assert_eq!(g.cell_of(Point::new(0.0, 0.0)), Some(0));
        assert_eq!(g.cell_of(Point::new(0.74, 0.26)), Some(g.index(1, 0)));
        assert_eq!(g.cell_of(Point::new(5.0, 1.0)), None);
        assert_eq!(g.cell_center(g.index(3, 2)), Point::new(1.75, 1.25));
    }

    #[test]
    fn neighbor_iterators_respect_borders() {
        let g = OccupancyGrid::new(3, 3, 1.0, CellState::Free).unwrap();
        assert_eq!(g.neighbors4(0).count(), 2);
        assert_eq!(g.neighbors4(4).count(), 4);
        assert_eq!(g.neighbors8(0).collect::<Vec<_>>(), vec![1, 3, 4]);
        assert_eq!(g.neighbors8(4).count(), 8);
    }

    #[test]
    fn ascii_picture_puts_first_line_on_top() {
        let g = OccupancyGrid::from_ascii("#..\n?.#", 1.0).unwrap();
        assert_eq!(g.cell(0, 1), CellState::Obstacle);
        assert_eq!(g.cell(0, 0), CellState::Unknown);
        assert_eq!(g.cell(2, 0), CellState::Obstacle);
    }

    #[test]
    fn binary_layout_and_round_trip() {
        let g = OccupancyGrid::from_ascii("#.?\n..#", 0.25).unwrap();
        let bytes = g.to_bytes();
        assert_eq!(&bytes[..4], b"OGRD");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(bytes.len(), 22 + 6);
        assert_eq!(bytes[22..], [1, 1, 2, 2, 1, 0]);
        assert_eq!(OccupancyGrid::from_bytes(&bytes).unwrap(), g);

        let mut bad = bytes.clone();
        bad[22] = 9;
        assert!(OccupancyGrid::from_bytes(&bad).is_err());
        assert!(OccupancyGrid::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn pgm_header() {
        let g = OccupancyGrid::new(4, 2, 1.0, CellState::Unknown).unwrap();
        let pgm = g.to_pgm();
        assert!(pgm.starts_with(b"P5\n4 2\n255\n"));
        assert_eq!(pgm.len(), 11 + 8);
    }
}
