//! Scenario driver: steps the simulation, evaluates the task and records metrics.

use serde::Serialize;

use crate::bridge::topics::{parse_command, CommandError};
use crate::error::{ConfigError, PhysicsError, ScenarioError};
use crate::frames::Vec3;
use crate::limb::{LimbId, LIMB_COUNT};
use crate::physics::{BodyId, ContactEvent, ContactPhase};
use crate::scenario::controller::{Controller, Poll, WireCommand};
use crate::scenario::grasp::{grasp_update, GraspEvent, GraspState, ARMS};
use crate::scenario::metrics::{LimbTrack, MetricsRecord, TipSample};
use crate::scenario::scene::Scene;
use crate::scenario::spec::{ScenarioKind, ScenarioSpec};
use crate::sim::{ContactRecord, Simulation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Running,
    Succeeded,
    Failed,
    Aborted,
}

/// Live task state, as published to operators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioStatus {
    pub kind: ScenarioKind,
    pub phase: Phase,
    pub step: u64,
    pub time: f64,
    pub time_limit: f64,
    pub success: bool,
    pub path_length: f64,
    pub attached: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Impact {
    time: f64,
    position: Vec3,
}

/// Contact record tagged with the step that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub step: u64,
    pub record: ContactRecord,
}

/// Everything a finished run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRun {
    pub record: MetricsRecord,
    pub trace: Vec<TraceEntry>,
    pub commands: Vec<WireCommand>,
}

pub struct ScenarioRunner {
    spec: ScenarioSpec,
    sim: Simulation,
    object: BodyId,
    grasp: GraspState,
    impact: Option<Impact>,
    success_time: Option<f64>,
    impact_displacement: Option<f64>,
    tracks: Vec<LimbTrack>,
    path_lengths: Vec<f64>,
    trace: Vec<TraceEntry>,
    log: Vec<WireCommand>,
    max_steps: u64,
    phase: Phase,
}

impl ScenarioRunner {
    /// `scene` must already carry the scenario's overrides (see `ScenarioSpec::effective_scene`).
    pub fn new(spec: ScenarioSpec, scene: &Scene, dt: f64) -> Result<Self, ConfigError> {
        spec.validate()?;
        let sim = scene.build_simulation(dt)?;
        let object = sim
            .world()
            .id(&spec.object)
            .ok_or_else(|| ConfigError::invalid("object", format!("no scene body `{}`", spec.object)))?;
        let state = &sim.world().body(object).state;
        if !(state.mass > 0.0 && state.inertia_diag.x.min(state.inertia_diag.y).min(state.inertia_diag.z) > 0.0) {
            return Err(ConfigError::invalid("object", format!("`{}` needs a mass so it can move when touched", spec.object)));
        }
        let max_steps = (spec.time_limit / dt).round().max(1.0) as u64;
        let tracks = LimbId::ALL
            .iter()
            .enumerate()
            .map(|(i, limb)| LimbTrack { limb: *limb, samples: vec![TipSample { t: 0.0, position: sim.tip_position(i) }] })
            .collect();
        Ok(ScenarioRunner {
            spec,
            sim,
            object,
            grasp: GraspState::default(),
            impact: None,
            success_time: None,
            impact_displacement: None,
            tracks,
            path_lengths: vec![0.0; LIMB_COUNT],
            trace: Vec::new(),
            log: Vec::new(),
            max_steps,
            phase: Phase::Running,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn sim(&self) -> &Simulation {
        &self.sim
    }

    pub fn object(&self) -> BodyId {
        self.object
    }

    pub fn grasp(&self) -> &GraspState {
        &self.grasp
    }

    pub fn step_index(&self) -> u64 {
        self.sim.step_index()
    }

    pub fn is_finished(&self) -> bool {
        self.phase != Phase::Running
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn status(&self) -> ScenarioStatus {
        ScenarioStatus {
            kind: self.spec.kind,
            phase: self.phase,
            step: self.sim.step_index(),
            time: self.sim.time(),
            time_limit: self.spec.time_limit,
            success: self.success_time.is_some(),
            path_length: self.path_lengths.iter().sum(),
            attached: self.grasp.attached_object.is_some(),
        }
    }

    /// Validates and applies a command for the upcoming step and logs it.
    pub fn submit(&mut self, topic: &str, msg: serde_json::Value) -> Result<(), CommandError> {
        let cmd = parse_command(topic, &msg)?;
        self.sim.apply(&cmd);
        self.log.push(WireCommand { step: self.sim.step_index(), topic: topic.to_owned(), msg });
        Ok(())
    }

    pub fn abort(&mut self) {
        if self.phase == Phase::Running {
            self.phase = Phase::Aborted;
        }
    }

    fn is_arm_segment(&self, id: BodyId) -> bool {
        self.sim.limb_of(id).is_some_and(|l| ARMS.contains(&l))
    }

    /// Advances one step and evaluates the task. No-op once finished.
    pub fn advance(&mut self) -> Result<&[ContactEvent], PhysicsError> {
        if self.is_finished() {
            return Ok(&[]);
        }
        let step = self.sim.step_index();
        let events = self.sim.step(&[])?.to_vec();
        let t = self.sim.time();

        if self.spec.kind.is_contact() {
            self.contact_task(&events, t);
        } else {
            let event = grasp_update(&mut self.grasp, &mut self.sim, self.object, self.spec.success.grasp_distance);
            if event == Some(GraspEvent::Attached) {
                log::info!("grasped `{}` at t={t:.2}", self.spec.object);
            }
            let zone = self.spec.target_zone.expect("validated for grasp tasks");
            let inside = zone.contains(self.sim.world().body(self.object).state.pose.position);
            if self.success_time.is_none() && self.grasp.released && self.grasp.attached_object.is_none() && inside {
                self.success_time = Some(t);
                log::info!("object placed at t={t:.2}");
            }
        }

        for (i, track) in self.tracks.iter_mut().enumerate() {
            let position = self.sim.tip_position(i);
            let last = track.samples.last().expect("initial sample").position;
            self.path_lengths[i] += last.distance(position);
            track.samples.push(TipSample { t, position });
        }
        let records = self.sim.contact_records(&events);
        self.trace.extend(records.into_iter().map(|record| TraceEntry { step, record }));

        let steps_done = self.sim.step_index();
        self.phase = match (self.success_time, self.spec.kind.is_contact()) {
            (Some(_), false) => Phase::Succeeded,
            (Some(_), true) if self.impact_displacement.is_some() => Phase::Succeeded,
            (None, _) if steps_done >= self.max_steps => Phase::Failed,
            _ => Phase::Running,
        };
        Ok(self.sim.last_events())
    }

    fn contact_task(&mut self, events: &[ContactEvent], t: f64) {
        let object = self.object;
        for e in events.iter().filter(|e| e.phase == ContactPhase::Enter && e.pair().involves(object)) {
            let other = if e.body_a == object { e.body_b } else { e.body_a };
            if !self.sim.is_robot_body(other) {
                continue;
            }
            if self.sim.world().body(object).state.kinematic {
                self.sim.world_mut().set_kinematic(object, false);
            }
            if self.success_time.is_none() && self.is_arm_segment(other) {
                self.success_time = Some(t);
                self.impact = Some(Impact { time: t, position: self.sim.world().body(object).state.pose.position });
                log::info!("arm touched `{}` at t={t:.2}", self.spec.object);
            }
        }
        if let (Some(impact), None) = (self.impact, self.impact_displacement) {
            if t - impact.time >= self.spec.success.settle_time - 1e-9 {
                let now = self.sim.world().body(object).state.pose.position;
                self.impact_displacement = Some(now.distance(impact.position));
            }
        }
    }

    /// Closes open contacts and assembles the metrics record.
    pub fn finish(mut self) -> ScenarioRun {
        if self.phase == Phase::Running {
            self.phase = if self.success_time.is_some() { Phase::Succeeded } else { Phase::Failed };
        }
        let step = self.sim.step_index();
        let exits = self.sim.close_contacts();
        let records = self.sim.contact_records(&exits);
        self.trace.extend(records.into_iter().map(|record| TraceEntry { step, record }));

        let success = self.success_time.is_some() && self.phase != Phase::Aborted;
        let record = MetricsRecord {
            scenario: self.spec.kind,
            success,
            aborted: self.phase == Phase::Aborted,
            time_to_completion: if success { self.success_time.expect("success") } else { self.spec.time_limit },
            time_limit: self.spec.time_limit,
            path_length: self.path_lengths.iter().sum(),
            limb_path_lengths: self.path_lengths.clone(),
            impact_displacement: self.impact_displacement,
            steps: step,
            final_state_hash: self.sim.state_hash(),
            command_log: None,
            tracks: self.tracks,
        };
        ScenarioRun { record, trace: self.trace, commands: self.log }
    }
}

/// Runs a scenario to completion with the given command source.
pub fn run_scenario(spec: &ScenarioSpec, scene: &Scene, controller: &mut dyn Controller, dt: f64) -> Result<ScenarioRun, ScenarioError> {
    let scene = spec.effective_scene(scene)?;
    let mut runner = ScenarioRunner::new(spec.clone(), &scene, dt)?;
    while !runner.is_finished() {
        match controller.poll(runner.step_index())? {
            Poll::Commands(cmds) => {
                for c in cmds {
                    runner.submit(&c.topic, c.msg).map_err(|e| ScenarioError::Controller(e.to_string()))?;
                }
            }
            Poll::Disconnected => {
                log::warn!("controller disconnected at step {}", runner.step_index());
                runner.abort();
                break;
            }
        }
        runner.advance()?;
    }
    Ok(runner.finish())
}

/// Checks that each pair's event sequence reads `(Enter Stay* Exit)+`.
pub fn lifecycle_violations(trace: &[TraceEntry]) -> Vec<String> {
    use std::collections::BTreeMap;
    let mut state: BTreeMap<(&str, &str), ContactPhase> = BTreeMap::new();
    let mut bad = Vec::new();
    for e in trace {
        let key = (e.record.body_a.as_str(), e.record.body_b.as_str());
        let prev = state.get(&key).copied();
        let ok = match e.record.phase {
            ContactPhase::Enter => matches!(prev, None | Some(ContactPhase::Exit)),
            ContactPhase::Stay | ContactPhase::Exit => matches!(prev, Some(ContactPhase::Enter | ContactPhase::Stay)),
        };
        if !ok {
            bad.push(format!("{}-{} {:?} after {:?} at step {}", key.0, key.1, e.record.phase, prev, e.step));
        }
        state.insert(key, e.record.phase);
    }
    for (key, phase) in state {
        if phase != ContactPhase::Exit {
            bad.push(format!("{}-{} left open", key.0, key.1));
        }
    }
    bad
}
