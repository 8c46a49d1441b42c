//! Agent-centric 128x128x3 map encoding.
//!
//! The tensor covers one full map side and is centred on the agent. Pixel
//! `(r, c)` samples the world cell under its centre (nearest neighbour);
//! row 0 is the lowest `y`. Channels: 0 explored (own belief known),
//! 1 obstacle (merged belief), 2 agent positions. Samples outside the
//! world are zero.

use explore_core::{CellState, OccupancyGrid, Point};
use serde::{Deserialize, Serialize};

pub const SIDE: usize = 128;
pub const CHANNELS: usize = 3;
pub const TENSOR_LEN: usize = SIDE * SIDE * CHANNELS;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeOptions {
    /// Rotate the frame so the agent's heading points along +x.
    pub rotate: bool,
}

/// Row-major `[row][col][channel]` f32 tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentCentricMap {
    pub data: Vec<f32>,
}

impl AgentCentricMap {
    fn zeros() -> Self {
        Self { data: vec![0.0; TENSOR_LEN] }
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * SIDE + col) * CHANNELS + channel]
    }

    fn set(&mut self, row: usize, col: usize, channel: usize, v: f32) {
        self.data[(row * SIDE + col) * CHANNELS + channel] = v;
    }

    /// Nonzero entries of one channel.
    pub fn count_nonzero(&self, channel: usize) -> usize {
        self.data.iter().skip(channel).step_by(CHANNELS).filter(|&&v| v != 0.0).count()
    }

    /// Little-endian f32 bytes in storage order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != TENSOR_LEN * 4 {
            return None;
        }
        let data = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        Some(Self { data })
    }
}

/// Frame mapping between tensor pixels and world points.
struct Frame {
    origin: Point,
    /// Meters per pixel.
    pixel: f64,
    cos: f64,
    sin: f64,
}

impl Frame {
    fn new(grid: &OccupancyGrid, pose: Point, heading: f64, opts: EncodeOptions) -> Self {
        let (w, h) = grid.extent();
        let angle = if opts.rotate { heading } else { 0.0 };
        Self { origin: pose, pixel: w.max(h) / SIDE as f64, cos: angle.cos(), sin: angle.sin() }
    }

    /// World point under the centre of pixel `(row, col)`.
    fn world(&self, row: usize, col: usize) -> Point {
        let half = SIDE as f64 / 2.0;
        let u = (col as f64 + 0.5 - half) * self.pixel;
        let v = (row as f64 + 0.5 - half) * self.pixel;
        if self.cos == 1.0 && self.sin == 0.0 {
            return Point::new(self.origin.x + u, self.origin.y + v);
        }
        Point::new(self.origin.x + u * self.cos - v * self.sin, self.origin.y + u * self.sin + v * self.cos)
    }

    /// Pixel containing a world point, clamped to the tensor border.
    fn pixel_of(&self, p: Point) -> (usize, usize) {
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        let (u, v) = (dx * self.cos + dy * self.sin, -dx * self.sin + dy * self.cos);
        let half = SIDE as f64 / 2.0;
        let idx = |t: f64| ((t / self.pixel + half).floor().max(0.0) as usize).min(SIDE - 1);
        (idx(v), idx(u))
    }
}

/// Nearest unused pixel to `(row, col)`, searching square rings outwards in
/// a fixed order.
fn free_pixel(used: &[bool], row: usize, col: usize) -> (usize, usize) {
    if !used[row * SIDE + col] {
        return (row, col);
    }
    for ring in 1..SIDE as i64 {
        for dr in -ring..=ring {
            for dc in -ring..=ring {
                if dr.abs() != ring && dc.abs() != ring {
                    continue;
                }
                let (r, c) = (row as i64 + dr, col as i64 + dc);
                if (0..SIDE as i64).contains(&r) && (0..SIDE as i64).contains(&c) && !used[r as usize * SIDE + c as usize]
                {
                    return (r as usize, c as usize);
                }
            }
        }
    }
    unreachable!("fewer agents than pixels")
}

/// Encode one agent's view. `merged` is its own belief joined with the
/// teammate maps it holds; `teammate_poses` may lie anywhere, blips outside
/// the tensor are clamped to its border and blips sharing a pixel are moved
/// to the nearest free one, so channel 2 always holds one blip per agent.
pub fn encode_agent_centric(
    own_belief: &OccupancyGrid,
    merged: &OccupancyGrid,
    self_pose: Point,
    heading: f64,
    teammate_poses: &[Point],
    opts: EncodeOptions,
) -> AgentCentricMap {
    let frame = Frame::new(own_belief, self_pose, heading, opts);
    let mut out = AgentCentricMap::zeros();
    for row in 0..SIDE {
        for col in 0..SIDE {
            let p = frame.world(row, col);
            if let Some(i) = own_belief.cell_of(p) {
                if own_belief.get(i).is_known() {
                    out.set(row, col, 0, 1.0);
                }
            }
            if let Some(i) = merged.cell_of(p) {
                if merged.get(i) == CellState::Obstacle {
                    out.set(row, col, 1, 1.0);
                }
            }
        }
    }
    let mut used = vec![false; SIDE * SIDE];
    for &p in std::iter::once(&self_pose).chain(teammate_poses) {
        let (r0, c0) = frame.pixel_of(p);
        let (r, c) = free_pixel(&used, r0, c0);
        used[r * SIDE + c] = true;
        out.set(r, c, 2, 1.0);
    }
    out
}
