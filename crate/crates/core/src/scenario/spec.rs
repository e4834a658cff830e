//! Scenario definition files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::frames::Vec3;
use crate::physics::{CurrentField, Trajectory};
use crate::scenario::scene::{check_schema_version, load_scene, Scene};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Touch a moving sphere with an arm.
    ContactTask,
    /// Pick an object up and release it inside a target zone.
    GraspTask,
    /// The contact task under a water current.
    FlowTask,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::ContactTask => "contact_task",
            ScenarioKind::GraspTask => "grasp_task",
            ScenarioKind::FlowTask => "flow_task",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [ScenarioKind::ContactTask, ScenarioKind::GraspTask, ScenarioKind::FlowTask].into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_contact(self) -> bool {
        matches!(self, ScenarioKind::ContactTask | ScenarioKind::FlowTask)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetZone {
    pub center: Vec3,
    /// m
    pub radius: f64,
}

impl TargetZone {
    pub fn contains(&self, p: Vec3) -> bool {
        p.distance(self.center) <= self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuccessParams {
    /// Largest tip-to-surface distance at which a grip attaches, m.
    pub grasp_distance: f64,
    /// Time after impact before the sphere displacement is measured, s.
    pub settle_time: f64,
}

impl Default for SuccessParams {
    fn default() -> Self {
        SuccessParams { grasp_distance: 0.05, settle_time: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    pub kind: ScenarioKind,
    /// Scene file, relative to the scenario file.
    pub scene: String,
    /// Scene body the task is about (sphere or grasp object).
    pub object: String,
    /// Scripted path for the object while it is kinematic; overrides the scene's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_trajectory: Option<Trajectory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_zone: Option<TargetZone>,
    /// s
    pub time_limit: f64,
    #[serde(default)]
    pub success: SuccessParams,
    /// Water current for this run; overrides the scene's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current: Option<CurrentField>,
}

impl ScenarioSpec {
    pub fn from_json_str(text: &str, what: &str) -> Result<ScenarioSpec, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|source| ConfigError::Parse { what: what.into(), source })?;
        check_schema_version(&value, SCENARIO_SCHEMA_VERSION)?;
        let spec: ScenarioSpec =
            serde_json::from_value(value).map_err(|source| ConfigError::Parse { what: what.into(), source })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return Err(ConfigError::invalid("time_limit", format!("must be > 0, got {}", self.time_limit)));
        }
        if self.object.is_empty() {
            return Err(ConfigError::invalid("object", "must name a scene body"));
        }
        match (&self.target_zone, self.kind) {
            (Some(z), _) if !(z.radius > 0.0 && z.radius.is_finite() && z.center.is_finite()) => {
                return Err(ConfigError::invalid("target_zone", format!("radius must be > 0, got {}", z.radius)))
            }
            (None, ScenarioKind::GraspTask) => return Err(ConfigError::invalid("target_zone", "required for grasp_task")),
            _ => {}
        }
        let s = &self.success;
        if !(s.grasp_distance >= 0.0 && s.grasp_distance.is_finite() && s.settle_time >= 0.0 && s.settle_time.is_finite()) {
            return Err(ConfigError::invalid("success", "grasp_distance and settle_time must be >= 0"));
        }
        if let Some(t) = &self.object_trajectory {
            t.validate().map_err(|d| ConfigError::invalid("object_trajectory", d))?;
        }
        if let Some(c) = &self.current {
            c.validate().map_err(|d| ConfigError::invalid("current", d))?;
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// The scene with this scenario's overrides applied.
    pub fn effective_scene(&self, scene: &Scene) -> Result<Scene, ConfigError> {
        let mut scene = scene.clone();
        if let Some(c) = &self.current {
            scene.current = c.clone();
        }
        let object = scene
            .bodies
            .iter_mut()
            .find(|b| b.id == self.object)
            .ok_or_else(|| ConfigError::invalid("object", format!("no scene body `{}`", self.object)))?;
        if let Some(t) = &self.object_trajectory {
            object.kinematic = true;
            object.trajectory = Some(t.clone());
        }
        Ok(scene)
    }
}

/// A scenario file together with its resolved scene.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedScenario {
    pub spec: ScenarioSpec,
    pub scene: Scene,
    pub path: PathBuf,
}

impl LoadedScenario {
    /// Scene with overrides applied, ready to build.
    pub fn scene(&self) -> Result<Scene, ConfigError> {
        self.spec.effective_scene(&self.scene)
    }
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    let spec = ScenarioSpec::from_json_str(&text, &path.display().to_string())?;
    let scene_path = path.parent().unwrap_or(Path::new(".")).join(&spec.scene);
    let scene = load_scene(&scene_path)?;
    let loaded = LoadedScenario { spec, scene, path: path.to_owned() };
    loaded.scene()?;
    Ok(loaded)
}
