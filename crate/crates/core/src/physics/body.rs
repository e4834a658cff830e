use serde::{Deserialize, Serialize};

use crate::frames::{Mat3, Pose, Vec3};
use crate::physics::hydro::HydroParams;
use crate::physics::shapes::ColliderShape;

/// Index of a body inside its [`World`](crate::physics::World).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BodyId(pub u32);

impl BodyId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidBodyState {
    pub pose: Pose,
    /// World frame, m/s.
    pub linear_velocity: Vec3,
    /// World frame, rad/s.
    pub angular_velocity: Vec3,
    pub mass: f64,
    /// Principal moments in the body frame, kg·m².
    pub inertia_diag: Vec3,
    /// Scripted bodies move by trajectory or external placement and ignore forces.
    pub kinematic: bool,
}

impl RigidBodyState {
    pub fn dynamic(pose: Pose, mass: f64, inertia_diag: Vec3) -> Self {
        RigidBodyState {
            pose,
            linear_velocity: Vec3::ZERO,
            angular_velocity: Vec3::ZERO,
            mass,
            inertia_diag,
            kinematic: false,
        }
    }

    pub fn kinematic(pose: Pose) -> Self {
        RigidBodyState {
            pose,
            linear_velocity: Vec3::ZERO,
            angular_velocity: Vec3::ZERO,
            mass: 0.0,
            inertia_diag: Vec3::ZERO,
            kinematic: true,
        }
    }

    pub fn inverse_inertia_world(&self) -> Mat3 {
        if self.kinematic {
            return Mat3::ZERO;
        }
        let d = self.inertia_diag.map(|i| 1.0 / i);
        Mat3::rotated_diagonal(&self.pose.orientation.to_matrix(), d)
    }

    pub fn kinetic_energy(&self) -> f64 {
        if self.kinematic {
            return 0.0;
        }
        let w = self.pose.orientation.conjugate().rotate(self.angular_velocity);
        0.5 * self.mass * self.linear_velocity.norm_squared() + 0.5 * self.inertia_diag.hadamard(w).dot(w)
    }

    pub fn momentum(&self) -> Vec3 {
        if self.kinematic {
            Vec3::ZERO
        } else {
            self.linear_velocity * self.mass
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pose.position.is_finite()
            && self.pose.orientation.is_finite()
            && self.linear_velocity.is_finite()
            && self.angular_velocity.is_finite()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.kinematic {
            if !(self.mass > 0.0 && self.mass.is_finite()) {
                return Err(format!("mass must be > 0, got {}", self.mass));
            }
            let i = self.inertia_diag;
            if !(i.is_finite() && i.x > 0.0 && i.y > 0.0 && i.z > 0.0) {
                return Err(format!("inertia_diag must be > 0, got {i}"));
            }
        }
        if !self.is_finite() {
            return Err("state must be finite".into());
        }
        self.pose.orientation.validate().map_err(|e| e.to_string())
    }
}

/// Surface response coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Material {
    pub restitution: f64,
    pub friction: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { restitution: 0.1, friction: 0.5 }
    }
}

impl Material {
    pub fn combine(a: Material, b: Material) -> Material {
        Material { restitution: a.restitution.max(b.restitution), friction: (a.friction * b.friction).sqrt() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(format!("restitution must be in [0, 1], got {}", self.restitution));
        }
        if !(self.friction >= 0.0 && self.friction.is_finite()) {
            return Err(format!("friction must be >= 0, got {}", self.friction));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub position: Vec3,
}

/// Piecewise-linear scripted path. Holds the end points outside its span.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
}

impl Trajectory {
    pub fn validate(&self) -> Result<(), String> {
        if self.waypoints.is_empty() {
            return Err("trajectory needs at least one waypoint".into());
        }
        if self.waypoints.iter().any(|w| !w.t.is_finite() || !w.position.is_finite()) {
            return Err("waypoints must be finite".into());
        }
        for w in self.waypoints.windows(2) {
            if w[1].t <= w[0].t {
                return Err(format!("waypoint times must increase ({} then {})", w[0].t, w[1].t));
            }
        }
        Ok(())
    }

    pub fn position_at(&self, t: f64) -> Vec3 {
        let w = &self.waypoints;
        if t <= w[0].t {
            return w[0].position;
        }
        for pair in w.windows(2) {
            if t <= pair[1].t {
                let s = (t - pair[0].t) / (pair[1].t - pair[0].t);
                return pair[0].position.lerp(pair[1].position, s);
            }
        }
        w[w.len() - 1].position
    }
}

/// Everything the world knows about one body.
#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub name: String,
    pub state: RigidBodyState,
    pub collider: Option<ColliderShape>,
    pub hydro: Option<HydroParams>,
    pub material: Material,
    /// Bodies sharing a group never collide with each other.
    pub group: Option<u32>,
    pub trajectory: Option<Trajectory>,
}

impl Body {
    pub fn new(name: impl Into<String>, state: RigidBodyState) -> Self {
        Body {
            name: name.into(),
            state,
            collider: None,
            hydro: None,
            material: Material::default(),
            group: None,
            trajectory: None,
        }
    }

    pub fn with_collider(mut self, shape: ColliderShape) -> Self {
        self.collider = Some(shape);
        self
    }

    pub fn with_hydro(mut self, hydro: HydroParams) -> Self {
        self.hydro = Some(hydro);
        self
    }

    pub fn with_material(mut self, material: Material) -> Self {
        self.material = material;
        self
    }

    pub fn with_group(mut self, group: u32) -> Self {
        self.group = Some(group);
        self
    }

    pub fn with_trajectory(mut self, trajectory: Trajectory) -> Self {
        self.trajectory = Some(trajectory);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        self.state.validate()?;
        if let Some(c) = &self.collider {
            c.validate()?;
        }
        if let Some(h) = &self.hydro {
            h.validate()?;
        }
        if let Some(t) = &self.trajectory {
            t.validate()?;
            if !self.state.kinematic {
                return Err("only kinematic bodies may follow a trajectory".into());
            }
        }
        self.material.validate()
    }
}
