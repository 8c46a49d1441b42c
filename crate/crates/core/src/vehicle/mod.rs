//! Ackermann vehicle model and local navigation.

mod dwa;
mod footprint;
mod kinematics;

pub use dwa::{
    control_lattice, dwa_select, dwa_select_among, nearest_obstacle_distance, obstacle_penalty, rollout, rollout_cost, DwaConfig,
    OBSTACLE_PENALTY_FLOOR,
};
pub use footprint::{footprint_collides, sweep_collides};
pub use kinematics::{step_kinematics, wrap_angle, AgentState, ControlInput, VehicleParams};
