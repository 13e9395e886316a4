//! Bicycle model with rear-wheel steering, referenced at the front axle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::normalize_angle;

pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("duration must be nonnegative, got {0}")]
    InvalidDuration(f64),
    #[error("invalid control input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    /// Rear steering angle.
    pub delta: f64,
    pub wheelbase: f64,
}

impl ControlInput {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.wheelbase > 0.0) {
            return Err(KinematicsError::InvalidInput(format!(
                "wheelbase must be positive, got {}",
                self.wheelbase
            )));
        }
        if !(self.delta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(KinematicsError::InvalidInput(format!(
                "steering angle must lie in (-pi/2, pi/2), got {}",
                self.delta
            )));
        }
        if !self.v.is_finite() {
            return Err(KinematicsError::InvalidInput(format!("speed must be finite, got {}", self.v)));
        }
        Ok(())
    }

    /// Signed turn radius `L / tan(delta)`; infinite when driving straight.
    pub fn turn_radius(&self) -> f64 {
        turn_radius(self.wheelbase, self.delta)
    }

    /// Yaw rate. Positive steering turns the vehicle clockwise.
    pub fn yaw_rate(&self) -> f64 {
        -self.v / self.wheelbase * self.delta.tan()
    }
}

pub fn turn_radius(wheelbase: f64, delta: f64) -> f64 {
    wheelbase / delta.tan()
}

/// `(dx/dt, dy/dt, dtheta/dt)`.
pub fn state_derivative(s: &VehicleState, u: &ControlInput) -> [f64; 3] {
    let (sin, cos) = s.theta.sin_cos();
    [u.v * cos, u.v * sin, u.yaw_rate()]
}

fn rk4_step(s: [f64; 3], u: &ControlInput, h: f64) -> [f64; 3] {
    let f = |z: [f64; 3]| {
        state_derivative(
            &VehicleState {
                x: z[0],
                y: z[1],
                theta: z[2],
            },
            u,
        )
    };
    let add = |z: [f64; 3], k: [f64; 3], c: f64| [z[0] + c * k[0], z[1] + c * k[1], z[2] + c * k[2]];
    let k1 = f(s);
    let k2 = f(add(s, k1, 0.5 * h));
    let k3 = f(add(s, k2, 0.5 * h));
    let k4 = f(add(s, k3, h));
    let mut out = s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Fixed-step fourth-order Runge-Kutta under constant input.
///
/// Returns `(t, state)` at `t = 0, dt, 2dt, ...` and at `duration` itself.
pub fn integrate(
    s0: VehicleState,
    u: &ControlInput,
    duration: f64,
    dt: f64,
) -> Result<Vec<(f64, VehicleState)>, KinematicsError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(KinematicsError::InvalidStep(dt));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(KinematicsError::InvalidDuration(duration));
    }
    u.validate()?;
    let steps = (duration / dt - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut z = [s0.x, s0.y, s0.theta];
    let mut t = 0.0;
    out.push((t, s0));
    for k in 1..=steps {
        let next_t = (k as f64 * dt).min(duration);
        z = rk4_step(z, u, next_t - t);
        t = next_t;
        out.push((t, VehicleState::new(z[0], z[1], z[2])));
    }
    Ok(out)
}
