//! Scene files: static and interactive bodies, currents and the robot.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::frames::{Pose, Vec3};
use crate::physics::{
    Body, ColliderShape, CurrentField, HydroParams, Material, RigidBodyState, Trajectory, World, DEFAULT_GRAVITY,
};
use crate::sim::{RobotConfig, Simulation};

pub const SCENE_SCHEMA_VERSION: u32 = 1;

fn default_gravity() -> Vec3 {
    DEFAULT_GRAVITY
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(v: &Vec3) -> bool {
    *v == Vec3::ZERO
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub kinematic: bool,
    #[serde(default)]
    pub pose: Pose,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub linear_velocity: Vec3,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub angular_velocity: Vec3,
    /// kg; required for dynamic bodies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// Principal moments, kg·m²; defaults to the solid collider's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collider: Option<ColliderShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hydro: Option<HydroParams>,
    #[serde(default)]
    pub material: Material,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

impl BodySpec {
    pub fn to_body(&self) -> Result<Body, ConfigError> {
        // Kinematic bodies keep a declared mass so they can later be released.
        let mut state = match (self.kinematic, self.mass) {
            (true, None) => RigidBodyState::kinematic(self.pose),
            (kinematic, mass) => {
                let mass = mass.ok_or_else(|| ConfigError::invalid(&self.id, "dynamic body needs a mass"))?;
                let inertia = match (&self.inertia, &self.collider) {
                    (Some(i), _) => *i,
                    (None, Some(c)) if !matches!(c, ColliderShape::HalfSpace { .. }) => c.solid_inertia(mass),
                    _ => return Err(ConfigError::invalid(&self.id, "dynamic body needs inertia or a finite collider")),
                };
                let mut s = RigidBodyState::dynamic(self.pose, mass, inertia);
                s.kinematic = kinematic;
                s
            }
        };
        state.linear_velocity = self.linear_velocity;
        state.angular_velocity = self.angular_velocity;
        let mut body = Body::new(&self.id, state).with_material(self.material);
        body.collider = self.collider.clone();
        body.hydro = self.hydro.clone();
        body.trajectory = self.trajectory.clone();
        body.validate().map_err(|d| ConfigError::invalid(&self.id, d))?;
        Ok(body)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_gravity")]
    pub gravity: Vec3,
    #[serde(default)]
    pub current: CurrentField,
    #[serde(default)]
    pub bodies: Vec<BodySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<RobotConfig>,
}

impl Scene {
    /// A bare seabed: one half-space with its surface at z = 0.
    pub fn empty() -> Self {
        Scene {
            schema_version: SCENE_SCHEMA_VERSION,
            name: "empty".into(),
            gravity: DEFAULT_GRAVITY,
            current: CurrentField::still(),
            bodies: vec![seabed()],
            robot: None,
        }
    }

    pub fn from_json_str(text: &str, what: &str) -> Result<Scene, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|source| ConfigError::Parse { what: what.into(), source })?;
        check_schema_version(&value, SCENE_SCHEMA_VERSION)?;
        let scene: Scene =
            serde_json::from_value(value).map_err(|source| ConfigError::Parse { what: what.into(), source })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = BTreeSet::new();
        for b in &self.bodies {
            if b.id.is_empty() {
                return Err(ConfigError::invalid("bodies", "body id must be non-empty"));
            }
            if !seen.insert(b.id.as_str()) {
                return Err(ConfigError::invalid(&b.id, format!("duplicate body id `{}`", b.id)));
            }
        }
        self.current.validate().map_err(|d| ConfigError::invalid("current", d))?;
        if !self.gravity.is_finite() {
            return Err(ConfigError::invalid("gravity", "must be finite"));
        }
        if let Some(r) = &self.robot {
            r.validate()?;
            if seen.iter().any(|id| id.starts_with(&format!("{}/", r.name))) {
                return Err(ConfigError::invalid(&r.name, "body ids may not use the robot name as a prefix"));
            }
        }
        Ok(())
    }

    /// World holding the scene bodies only.
    pub fn build_world(&self, dt: f64) -> Result<World, ConfigError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::invalid("dt", format!("must be > 0, got {dt}")));
        }
        let mut world = World::new(dt);
        world.gravity = self.gravity;
        world.current = self.current.clone();
        for spec in &self.bodies {
            world
                .add_body(spec.to_body()?)
                .map_err(|e| ConfigError::invalid(&spec.id, e.to_string()))?;
        }
        Ok(world)
    }

    /// Scene bodies plus the robot (default robot when the scene names none).
    pub fn build_simulation(&self, dt: f64) -> Result<Simulation, ConfigError> {
        let world = self.build_world(dt)?;
        Simulation::new(world, self.robot.clone().unwrap_or_default())
    }
}

pub fn seabed() -> BodySpec {
    BodySpec {
        id: "seabed".into(),
        kinematic: true,
        pose: Pose::IDENTITY,
        linear_velocity: Vec3::ZERO,
        angular_velocity: Vec3::ZERO,
        mass: None,
        inertia: None,
        collider: Some(ColliderShape::HalfSpace { normal: Vec3::Z, offset: 0.0 }),
        hydro: None,
        material: Material::default(),
        trajectory: None,
    }
}

pub(crate) fn check_schema_version(value: &serde_json::Value, expected: u32) -> Result<(), ConfigError> {
    match value.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == expected as u64 => Ok(()),
        Some(v) => Err(ConfigError::SchemaVersion { found: v.min(u32::MAX as u64) as u32, expected }),
        None => Err(ConfigError::invalid("schema_version", "missing or not an unsigned integer")),
    }
}

pub fn load_scene(path: &Path) -> Result<Scene, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    Scene::from_json_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene_is_one_half_space() {
        let world = Scene::empty().build_world(0.02).unwrap();
        assert_eq!(world.bodies().len(), 1);
        assert!(matches!(world.bodies()[0].collider, Some(ColliderShape::HalfSpace { .. })));
    }

    #[test]
    fn minimal_file_parses() {
        let s = Scene::from_json_str(r#"{"schema_version":1}"#, "inline").unwrap();
        assert!(s.bodies.is_empty());
        assert_eq!(s.gravity, DEFAULT_GRAVITY);
    }

    #[test]
    fn rejects_other_schema_versions() {
        let err = Scene::from_json_str(r#"{"schema_version":2}"#, "inline").unwrap_err();
        assert!(matches!(err, ConfigError::SchemaVersion { found: 2, expected: 1 }));
    }

    #[test]
    fn duplicate_id_is_named() {
        let mut s = Scene::empty();
        s.bodies.push(seabed());
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("seabed"), "{err}");
    }

    #[test]
    fn dynamic_without_mass_is_named() {
        let text = r#"{"schema_version":1,"bodies":[{"id":"rock","collider":{"type":"sphere","radius":0.1}}]}"#;
        let err = Scene::from_json_str(text, "inline").unwrap().build_world(0.02).unwrap_err();
        assert!(err.to_string().contains("rock") && err.to_string().contains("mass"), "{err}");
    }

    #[test]
    fn bad_collider_is_named() {
        let text = r#"{"schema_version":1,"bodies":[{"id":"ball","mass":1,"collider":{"type":"sphere","radius":-1}}]}"#;
        let err = Scene::from_json_str(text, "inline").unwrap().build_world(0.02).unwrap_err();
        assert!(err.to_string().contains("ball"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let err = Scene::from_json_str(r#"{"schema_version":1,"bogus":3}"#, "inline").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn roundtrip_through_json() {
        let mut s = Scene::empty();
        s.robot = Some(RobotConfig::default());
        let back = Scene::from_json_str(&s.to_json_string(), "inline").unwrap();
        assert_eq!(back, s);
    }
}
