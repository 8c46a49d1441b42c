//! Deterministic multi-agent exploration on occupancy grids.
//!
//! The crate is organised by subsystem:
//!
//! - [`world`]: ground-truth map generation, lidar sensing, belief maintenance,
//!   map merging, frontier detection and coverage accounting.
//! - [`vehicle`]: Ackermann kinematics and Dynamic Window Approach navigation.
//! - [`planners`]: RRT, potential-field and Voronoi exploration planners plus the
//!   bi-level goal codec shared by all policies.
//! - [`comms`]: communication topology, message dropout and stale teammate views.
//! - [`sim`]: the episode engine, reward accounting and the replayable episode log.
//! - [`metrics`]: per-episode and aggregate evaluation metrics.
//!
//! Every source of randomness is a named stream derived from the episode seed
//! (see [`rng`]), so an episode is a pure function of its configuration.

pub mod comms;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod planners;
pub mod rng;
pub mod sim;
pub mod vehicle;
pub mod world;

pub use error::{Error, Result};
pub use grid::{CellState, OccupancyGrid, Point};
