//! Benchmark tasks: scene files, scenario definitions, grasping, metrics
//! and the run driver.

pub mod controller;
pub mod grasp;
pub mod metrics;
pub mod runner;
pub mod scene;
pub mod spec;

pub use controller::{ChannelController, ControlMessage, Controller, IdleController, Poll, ScriptedController, WireCommand};
pub use grasp::{grasp_frame, grasp_update, GraspEvent, GraspState};
pub use metrics::{path_length, LimbTrack, MetricsFormat, MetricsRecord, TipSample};
pub use runner::{lifecycle_violations, run_scenario, Phase, ScenarioRun, ScenarioRunner, ScenarioStatus, TraceEntry};
pub use scene::{load_scene, BodySpec, Scene};
pub use spec::{load_scenario, LoadedScenario, ScenarioKind, ScenarioSpec, SuccessParams, TargetZone};
