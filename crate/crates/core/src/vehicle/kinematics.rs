use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Point;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl AgentState {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Acceleration (m/s^2) and front-wheel steering angle (rad).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub a: f64,
    pub phi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Wheelbase in meters.
    pub wheelbase: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub phi_max: f64,
    pub footprint_radius: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { wheelbase: 0.8, v_max: 10.0, a_max: 5.0, phi_max: 0.6, footprint_radius: 0.4 }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wheelbase", self.wheelbase),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("phi_max", self.phi_max),
            ("footprint_radius", self.footprint_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("vehicle.{name} must be positive, got {v}")));
            }
        }
        if self.phi_max >= PI / 2.0 {
            return Err(Error::config("vehicle.phi_max must be below pi/2"));
        }
        Ok(())
    }
}

/// Wrap an angle into `(-pi, pi]`. Angles already in range are returned unchanged.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut t = theta - TAU * ((theta + PI) / TAU).floor();
    if t <= -PI {
        t += TAU;
    }
    if t > PI {
        t -= TAU;
    }
    t
}

/// One explicit-Euler step of the kinematic bicycle:
/// `x' = v cos(theta)`, `y' = v sin(theta)`, `v' = a`, `theta' = v tan(phi) / L`.
pub fn step_kinematics(s: AgentState, u: ControlInput, dt: f64, params: &VehicleParams) -> AgentState {
    AgentState {
        x: s.x + s.v * s.theta.cos() * dt,
        y: s.y + s.v * s.theta.sin() * dt,
        theta: wrap_angle(s.theta + s.v * u.phi.tan() / params.wheelbase * dt),
        v: (s.v + u.a * dt).clamp(-params.v_max, params.v_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> VehicleParams {
        VehicleParams { wheelbase: 1.0, ..Default::default() }
    }

    #[test]
    fn straight_line_step() {
        let s = AgentState { x: 0.0, y: 0.0, theta: 0.0, v: 1.0 };
        let n = step_kinematics(s, ControlInput::default(), 0.1, &unit_params());
        assert!((n.x - 0.1).abs() < 1e-12);
        assert_eq!((n.y, n.theta, n.v), (0.0, 0.0, 1.0));
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let s = AgentState { x: 3.0, y: -2.0, theta: 1.0, v: 0.0 };
        let n = step_kinematics(s, ControlInput { a: 0.0, phi: 0.4 }, 0.1, &unit_params());
        assert_eq!(n, s);
    }

    #[test]
    fn steering_rate() {
        let s = AgentState { x: 0.0, y: 0.0, theta: 0.0, v: 1.0 };
        let n = step_kinematics(s, ControlInput { a: 0.0, phi: PI / 4.0 }, 0.1, &unit_params());
        assert!((n.theta - 0.1).abs() < 1e-12);
        assert!((n.x - 0.1).abs() < 1e-12);
    }

    #[test]
    fn speed_is_clamped() {
        let p = VehicleParams { v_max: 2.0, ..unit_params() };
        let s = AgentState { v: 1.95, ..Default::default() };
        let n = step_kinematics(s, ControlInput { a: 1.0, phi: 0.0 }, 0.1, &p);
        assert_eq!(n.v, 2.0);
        let s = AgentState { v: -1.95, ..Default::default() };
        let n = step_kinematics(s, ControlInput { a: -1.0, phi: 0.0 }, 0.1, &p);
        assert_eq!(n.v, -2.0);
    }

    #[test]
    fn angle_wrapping() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(-7.0) - (-7.0 + TAU)).abs() < 1e-12);
        assert_eq!(wrap_angle(0.3), 0.3);
    }

    #[test]
    fn zero_steer_keeps_heading_exactly() {
        let p = VehicleParams::default();
        let mut s = AgentState { x: 5.0, y: 5.0, theta: 0.7, v: 1.0 };
        for _ in 0..1000 {
            s = step_kinematics(s, ControlInput { a: 0.3, phi: 0.0 }, 0.1, &p);
            assert_eq!(s.theta, 0.7);
        }
    }

    #[test]
    fn half_circle_error_shrinks_with_dt() {
        // Constant v and phi trace a circle of radius L / tan(phi) centred at
        // (0, R); half a revolution ends at (0, 2R). Euler drifts by O(dt).
        let p = VehicleParams { wheelbase: 1.0, v_max: 10.0, ..Default::default() };
        let phi = 0.5f64;
        let radius = p.wheelbase / phi.tan();
        let period = std::f64::consts::TAU * radius;
        let error = |n: usize| {
            let dt = period / n as f64;
            let mut s = AgentState { x: 0.0, y: 0.0, theta: 0.0, v: 1.0 };
            for _ in 0..n / 2 {
                s = step_kinematics(s, ControlInput { a: 0.0, phi }, dt, &p);
            }
            s.x.hypot(s.y - 2.0 * radius)
        };
        let (e1, e2, e3) = (error(200), error(400), error(800));
        assert!(e1 < 0.1 * radius);
        let r1 = e1 / e2;
        let r2 = e2 / e3;
        assert!((1.6..2.4).contains(&r1), "ratio {r1}");
        assert!((1.6..2.4).contains(&r2), "ratio {r2}");
    }
}
