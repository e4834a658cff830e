//! Body propulsion: normalized commands, first-order speed ramping, and the
//! resulting body-frame thrust and yaw torque.

use serde::{Deserialize, Serialize};

use crate::frames::{Pose, Vec3};
use crate::physics::Wrench;

/// Normalized propulsion demand; every axis lives in `[-1, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PropulsionCommand {
    pub surge: f64,
    pub sway: f64,
    pub heave: f64,
    pub yaw_rate: f64,
}

fn unit_clamp(v: f64) -> f64 {
    if v.is_finite() {
        v.clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

impl PropulsionCommand {
    pub const ZERO: PropulsionCommand = PropulsionCommand { surge: 0.0, sway: 0.0, heave: 0.0, yaw_rate: 0.0 };

    pub fn new(surge: f64, sway: f64, heave: f64, yaw_rate: f64) -> Self {
        PropulsionCommand { surge, sway, heave, yaw_rate }.clamped()
    }

    pub fn clamped(self) -> Self {
        PropulsionCommand {
            surge: unit_clamp(self.surge),
            sway: unit_clamp(self.sway),
            heave: unit_clamp(self.heave),
            yaw_rate: unit_clamp(self.yaw_rate),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.surge, self.sway, self.heave, self.yaw_rate]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PropulsionCommand { surge: a[0], sway: a[1], heave: a[2], yaw_rate: a[3] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RampParams {
    /// s
    pub time_constant: f64,
    /// Full-command thrust along body X, Y, Z, N.
    pub max_thrust: Vec3,
    /// N·m
    pub max_yaw_torque: f64,
}

impl Default for RampParams {
    fn default() -> Self {
        // placeholder thrust figures for a ~30 kg vehicle
        RampParams { time_constant: 1.5, max_thrust: Vec3::new(60.0, 40.0, 40.0), max_yaw_torque: 8.0 }
    }
}

impl RampParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.time_constant > 0.0 && self.time_constant.is_finite()) {
            return Err(format!("time_constant must be > 0, got {}", self.time_constant));
        }
        let limits = [self.max_thrust.x, self.max_thrust.y, self.max_thrust.z, self.max_yaw_torque];
        if limits.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err("thrust limits must be > 0".into());
        }
        Ok(())
    }
}

/// One step of the first-order lag `r' = r + (u − r)(1 − e^{−dt/τ})`, per axis.
pub fn ramp_command(ramped: &PropulsionCommand, raw: &PropulsionCommand, dt: f64, params: &RampParams) -> PropulsionCommand {
    let alpha = -(-dt / params.time_constant).exp_m1();
    let raw = raw.clamped();
    let r = ramped.as_array();
    let u = raw.as_array();
    PropulsionCommand::from_array([0, 1, 2, 3].map(|i| r[i] + (u[i] - r[i]) * alpha))
}

/// Body-frame thrust and yaw torque for a ramped command, rotated into the world frame.
pub fn propulsion_wrench(ramped: &PropulsionCommand, params: &RampParams, body_pose: &Pose) -> Wrench {
    let thrust = Vec3::new(ramped.surge, ramped.sway, ramped.heave).hadamard(params.max_thrust);
    let torque = Vec3::new(0.0, 0.0, ramped.yaw_rate * params.max_yaw_torque);
    let q = body_pose.orientation;
    Wrench::new(q.rotate(thrust), q.rotate(torque))
}

/// Propulsion state carried between steps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VehicleState {
    pub raw_command: PropulsionCommand,
    pub ramped_command: PropulsionCommand,
}

impl VehicleState {
    /// Advances the ramp and returns the world-frame wrench for this step.
    pub fn apply_propulsion(&mut self, params: &RampParams, body_pose: &Pose, dt: f64) -> Wrench {
        self.ramped_command = ramp_command(&self.ramped_command, &self.raw_command, dt, params);
        propulsion_wrench(&self.ramped_command, params, body_pose)
    }
}
