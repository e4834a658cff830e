//! Run recording and bit-exact replay.
//!
//! A replay file is JSON lines: a header carrying the configuration
//! fingerprint, one `{step, topic, msg}` line per command, and a footer with
//! the final state hash.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ReplayError;
use crate::physics::world::hex_digest;
use crate::scenario::{run_scenario, Scene, ScenarioRun, ScenarioSpec, ScriptedController, WireCommand};

pub const REPLAY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayHeader {
    #[serde(rename = "type")]
    pub kind: String,
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub dt: f64,
    pub seed: u64,
    pub scenario: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFooter {
    #[serde(rename = "type")]
    pub kind: String,
    pub final_state_hash: String,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayFile {
    pub header: ReplayHeader,
    pub commands: Vec<WireCommand>,
    pub footer: ReplayFooter,
}

/// Hash of everything that determines a run besides the command stream.
/// `scene` is the scene as loaded; scenario overrides are applied here.
pub fn config_fingerprint(spec: &ScenarioSpec, scene: &Scene, dt: f64, seed: u64) -> Result<String, ReplayError> {
    let effective = spec.effective_scene(scene).map_err(|e| ReplayError::Scenario(e.into()))?;
    let mut h = Sha256::new();
    h.update(b"marun-config-v1");
    h.update(dt.to_bits().to_le_bytes());
    h.update(seed.to_le_bytes());
    h.update(serde_json::to_string(spec).expect("spec serializes").as_bytes());
    h.update(serde_json::to_string(&effective).expect("scene serializes").as_bytes());
    Ok(hex_digest(h))
}

impl ReplayFile {
    pub fn from_run(spec: &ScenarioSpec, scene: &Scene, dt: f64, seed: u64, run: &ScenarioRun) -> Result<Self, ReplayError> {
        Ok(ReplayFile {
            header: ReplayHeader {
                kind: "header".into(),
                schema_version: REPLAY_SCHEMA_VERSION,
                config_fingerprint: config_fingerprint(spec, scene, dt, seed)?,
                dt,
                seed,
                scenario: spec.kind.as_str().into(),
            },
            commands: run.commands.clone(),
            footer: ReplayFooter {
                kind: "footer".into(),
                final_state_hash: run.record.final_state_hash.clone(),
                steps: run.record.steps,
            },
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = Vec::new();
        let line = |out: &mut Vec<u8>, v: String| writeln!(out, "{v}").expect("write to vec");
        line(&mut out, serde_json::to_string(&self.header).expect("header serializes"));
        for c in &self.commands {
            line(&mut out, serde_json::to_string(c).expect("command serializes"));
        }
        line(&mut out, serde_json::to_string(&self.footer).expect("footer serializes"));
        String::from_utf8(out).expect("json is utf-8")
    }

    pub fn parse(text: &str) -> Result<Self, ReplayError> {
        let malformed = |line: usize, detail: String| ReplayError::Malformed { line, detail };
        let lines: Vec<(usize, &str)> =
            text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
        let (Some(first), Some(last)) = (lines.first(), lines.last()) else {
            return Err(malformed(1, "empty replay file".into()));
        };
        if lines.len() < 2 {
            return Err(malformed(first.0, "missing footer".into()));
        }
        let header: ReplayHeader = serde_json::from_str(first.1).map_err(|e| malformed(first.0, format!("header: {e}")))?;
        if header.kind != "header" {
            return Err(malformed(first.0, "first line must be the header".into()));
        }
        if header.schema_version != REPLAY_SCHEMA_VERSION {
            return Err(malformed(first.0, format!("unsupported schema_version {}", header.schema_version)));
        }
        let footer: ReplayFooter = serde_json::from_str(last.1).map_err(|e| malformed(last.0, format!("footer: {e}")))?;
        if footer.kind != "footer" {
            return Err(malformed(last.0, "last line must be the footer".into()));
        }
        let commands = lines[1..lines.len() - 1]
            .iter()
            .map(|(n, l)| serde_json::from_str::<WireCommand>(l).map_err(|e| malformed(*n, e.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(ReplayFile { header, commands, footer })
    }

    pub fn write(&self, path: &Path) -> Result<(), ReplayError> {
        std::fs::write(path, self.to_jsonl()).map_err(|source| ReplayError::Io { path: path.to_owned(), source })
    }

    pub fn read(path: &Path) -> Result<Self, ReplayError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReplayError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }
}

/// Writes the command log and final hash of a finished run.
pub fn record_run(path: &Path, spec: &ScenarioSpec, scene: &Scene, dt: f64, seed: u64, run: &ScenarioRun) -> Result<ReplayFile, ReplayError> {
    let file = ReplayFile::from_run(spec, scene, dt, seed, run)?;
    file.write(path)?;
    Ok(file)
}

/// Re-executes a recorded run under the current configuration. Refuses a
/// file recorded under a different configuration; fails if the final state
/// hash differs.
pub fn replay(file: &ReplayFile, spec: &ScenarioSpec, scene: &Scene, dt: f64, seed: u64) -> Result<ScenarioRun, ReplayError> {
    let current = config_fingerprint(spec, scene, dt, seed)?;
    if current != file.header.config_fingerprint {
        return Err(ReplayError::FingerprintMismatch { recorded: file.header.config_fingerprint.clone(), current });
    }
    let mut controller = ScriptedController::new(file.commands.clone());
    let run = run_scenario(spec, scene, &mut controller, dt)?;
    if run.record.final_state_hash != file.footer.final_state_hash {
        return Err(ReplayError::HashMismatch {
            recorded: file.footer.final_state_hash.clone(),
            replayed: run.record.final_state_hash.clone(),
        });
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{Pose, Vec3};
    use crate::physics::ColliderShape;
    use crate::scenario::scene::BodySpec;
    use crate::scenario::{IdleController, ScenarioKind, SuccessParams};

    fn setup() -> (ScenarioSpec, Scene) {
        let mut scene = Scene::empty();
        scene.bodies.push(BodySpec {
            id: "ball".into(),
            kinematic: true,
            pose: Pose::from_position(Vec3::new(3.0, 0.0, 1.0)),
            mass: Some(1.0),
            collider: Some(ColliderShape::Sphere { radius: 0.1 }),
            ..crate::scenario::scene::seabed()
        });
        let spec = ScenarioSpec {
            schema_version: 1,
            kind: ScenarioKind::ContactTask,
            scene: "inline".into(),
            object: "ball".into(),
            object_trajectory: None,
            target_zone: None,
            time_limit: 0.5,
            success: SuccessParams::default(),
            current: None,
        };
        (spec, scene)
    }

    #[test]
    fn empty_stream_records_unperturbed_hash() {
        let (spec, scene) = setup();
        let run = run_scenario(&spec, &scene, &mut IdleController, 0.02).unwrap();
        let file = ReplayFile::from_run(&spec, &scene, 0.02, 0, &run).unwrap();
        assert!(file.commands.is_empty());
        let parsed = ReplayFile::parse(&file.to_jsonl()).unwrap();
        assert_eq!(parsed, file);
        let again = replay(&parsed, &spec, &scene, 0.02, 0).unwrap();
        assert_eq!(again.record.final_state_hash, run.record.final_state_hash);
    }

    #[test]
    fn dt_mismatch_is_refused() {
        let (spec, scene) = setup();
        let run = run_scenario(&spec, &scene, &mut IdleController, 0.02).unwrap();
        let file = ReplayFile::from_run(&spec, &scene, 0.02, 0, &run).unwrap();
        let err = replay(&file, &spec, &scene, 0.01, 0).unwrap_err();
        assert!(matches!(err, ReplayError::FingerprintMismatch { .. }));
    }

    #[test]
    fn tampered_hash_is_detected() {
        let (spec, scene) = setup();
        let run = run_scenario(&spec, &scene, &mut IdleController, 0.02).unwrap();
        let mut file = ReplayFile::from_run(&spec, &scene, 0.02, 0, &run).unwrap();
        file.footer.final_state_hash = "0".repeat(64);
        assert!(matches!(replay(&file, &spec, &scene, 0.02, 0), Err(ReplayError::HashMismatch { .. })));
    }

    #[test]
    fn malformed_lines_are_located() {
        let err = ReplayFile::parse("{\"type\":\"header\"}\n").unwrap_err();
        assert!(matches!(err, ReplayError::Malformed { line: 1, .. }));
    }
}
