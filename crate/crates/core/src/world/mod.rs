//! Ground truth, sensing and belief maintenance.

mod belief;
mod mapgen;
mod raycast;
mod scenario;

pub use belief::{
    detect_frontiers, exploration_ratio, integrate_scan, merge_into, merge_maps, reachable_free_cells,
    FrontierConnectivity,
};
pub use mapgen::{generate_maze, generate_maze_with_walls, generate_random_obstacles};
pub use raycast::{raycast_scan, segment_cells, segment_is_clear, traverse_ray, ScanResult};
pub use scenario::{build_world, ScenarioConfig, ScenarioKind};
