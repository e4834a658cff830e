//! Buoyancy, diagonal added mass and body-frame damping.

use serde::{Deserialize, Serialize};

use crate::frames::{Mat3, Vec3};
use crate::physics::body::RigidBodyState;

pub const SEAWATER_DENSITY: f64 = 1025.0;

/// Per-body hydrodynamic coefficients. Diagonal entries are body-frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroParams {
    pub fluid_density: f64,
    pub displaced_volume: f64,
    pub center_of_buoyancy_offset: Vec3,
    pub added_mass_diag: Vec3,
    pub linear_drag_diag: Vec3,
    pub quadratic_drag_diag: Vec3,
    pub angular_drag_diag: Vec3,
}

impl Default for HydroParams {
    fn default() -> Self {
        HydroParams {
            fluid_density: SEAWATER_DENSITY,
            displaced_volume: 0.0,
            center_of_buoyancy_offset: Vec3::ZERO,
            added_mass_diag: Vec3::ZERO,
            linear_drag_diag: Vec3::ZERO,
            quadratic_drag_diag: Vec3::ZERO,
            angular_drag_diag: Vec3::ZERO,
        }
    }
}

impl HydroParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.fluid_density > 0.0 && self.fluid_density.is_finite()) {
            return Err(format!("fluid_density must be > 0, got {}", self.fluid_density));
        }
        if !(self.displaced_volume >= 0.0 && self.displaced_volume.is_finite()) {
            return Err(format!("displaced_volume must be >= 0, got {}", self.displaced_volume));
        }
        if !self.center_of_buoyancy_offset.is_finite() {
            return Err("center_of_buoyancy_offset must be finite".into());
        }
        let diags = [
            ("added_mass_diag", self.added_mass_diag),
            ("linear_drag_diag", self.linear_drag_diag),
            ("quadratic_drag_diag", self.quadratic_drag_diag),
            ("angular_drag_diag", self.angular_drag_diag),
        ];
        for (name, d) in diags {
            if !(d.is_finite() && d.x >= 0.0 && d.y >= 0.0 && d.z >= 0.0) {
                return Err(format!("{name} must be finite and >= 0, got {d}"));
            }
        }
        Ok(())
    }
}

/// Optional periodic modulation of a uniform current.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentModulation {
    pub amplitude: Vec3,
    pub period: f64,
}

/// Spatially uniform water current, optionally modulated by a sinusoid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurrentField {
    pub velocity: Vec3,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulation: Option<CurrentModulation>,
}

impl CurrentField {
    pub fn still() -> Self {
        CurrentField::default()
    }

    pub fn uniform(velocity: Vec3) -> Self {
        CurrentField { velocity, modulation: None }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.velocity.is_finite() {
            return Err("current velocity must be finite".into());
        }
        if let Some(m) = &self.modulation {
            if !(m.period > 0.0 && m.period.is_finite()) {
                return Err(format!("current modulation period must be > 0, got {}", m.period));
            }
            if !m.amplitude.is_finite() {
                return Err("current modulation amplitude must be finite".into());
            }
        }
        Ok(())
    }

    pub fn velocity_at(&self, time: f64) -> Vec3 {
        match &self.modulation {
            None => self.velocity,
            Some(m) => {
                let phase = (std::f64::consts::TAU * time / m.period).sin();
                self.velocity + m.amplitude * phase
            }
        }
    }
}

/// Force and torque about the center of mass, world frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench { force: Vec3::ZERO, torque: Vec3::ZERO };

    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Wrench { force, torque }
    }
}

impl std::ops::AddAssign for Wrench {
    fn add_assign(&mut self, o: Wrench) {
        self.force += o.force;
        self.torque += o.torque;
    }
}

/// Archimedes force `-ρ V g`, applied at the center of buoyancy.
pub fn buoyancy_force(body: &RigidBodyState, hydro: &HydroParams, gravity: Vec3) -> Wrench {
    let displaced_mass = hydro.fluid_density * hydro.displaced_volume;
    let force = gravity * (-displaced_mass);
    let lever = body.pose.orientation.rotate(hydro.center_of_buoyancy_offset);
    Wrench::new(force, lever.cross(force))
}

/// Linear + quadratic damping on the velocity relative to the local current,
/// and linear angular damping. Evaluated in the body frame, returned in world.
pub fn drag_force(body: &RigidBodyState, hydro: &HydroParams, current: Vec3) -> Wrench {
    let q = body.pose.orientation;
    let inv = q.conjugate();
    let u = inv.rotate(body.linear_velocity - current);
    let quadratic = Vec3::new(u.x.abs() * u.x, u.y.abs() * u.y, u.z.abs() * u.z);
    let force_body = -(hydro.linear_drag_diag.hadamard(u) + hydro.quadratic_drag_diag.hadamard(quadratic));
    let w = inv.rotate(body.angular_velocity);
    let torque_body = -hydro.angular_drag_diag.hadamard(w);
    Wrench::new(q.rotate(force_body), q.rotate(torque_body))
}

/// World-frame inverse of `(m + m_a)` as a tensor. Zero for kinematic bodies.
pub fn inverse_effective_mass(body: &RigidBodyState, added_mass: Vec3) -> Mat3 {
    if body.kinematic {
        return Mat3::ZERO;
    }
    let d = Vec3::new(
        1.0 / (body.mass + added_mass.x),
        1.0 / (body.mass + added_mass.y),
        1.0 / (body.mass + added_mass.z),
    );
    Mat3::rotated_diagonal(&body.pose.orientation.to_matrix(), d)
}

/// Linear acceleration under `net_force` with per-axis added mass:
/// `a_i = F_i / (m + m_a,i)` along each body axis.
pub fn apply_added_mass(body: &RigidBodyState, hydro: Option<&HydroParams>, net_force: Vec3) -> Vec3 {
    if body.kinematic {
        return Vec3::ZERO;
    }
    let added = hydro.map_or(Vec3::ZERO, |h| h.added_mass_diag);
    let q = body.pose.orientation;
    let f = q.conjugate().rotate(net_force);
    let a = Vec3::new(
        f.x / (body.mass + added.x),
        f.y / (body.mass + added.y),
        f.z / (body.mass + added.z),
    );
    q.rotate(a)
}
