//! `marun` command line.
//!
//! Exit codes: 0 success, 1 replay hash mismatch, 2 scenario failed or
//! aborted, 3 configuration error (including replay fingerprint refusal),
//! 4 runtime fault.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::bridge::{self, BridgeConfig, Driver, Pacing, DEFAULT_BIND};
use crate::error::{ConfigError, ReplayError, ScenarioError};
use crate::replay::{record_run, replay, ReplayFile};
use crate::scenario::{
    load_scenario, load_scene, run_scenario, LoadedScenario, MetricsFormat, ScenarioRun, ScenarioRunner, Scene,
    ScriptedController,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_HASH_MISMATCH: u8 = 1;
pub const EXIT_SCENARIO_FAILED: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Serve,
    RunScenario,
    Replay,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ControllerArg {
    Bridge,
    Scripted(PathBuf),
    Replay(PathBuf),
}

fn parse_controller(s: &str) -> Result<ControllerArg, String> {
    match s.split_once(':') {
        None if s == "bridge" => Ok(ControllerArg::Bridge),
        Some(("scripted", p)) if !p.is_empty() => Ok(ControllerArg::Scripted(p.into())),
        Some(("replay", p)) if !p.is_empty() => Ok(ControllerArg::Replay(p.into())),
        _ => Err(format!("expected `bridge`, `scripted:<path>` or `replay:<path>`, got `{s}`")),
    }
}

fn parse_dt(s: &str) -> Result<f64, String> {
    let dt: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if dt.is_finite() && dt > 0.0 {
        Ok(dt)
    } else {
        Err("dt must be a positive number of seconds".into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "marun", version, about = "Underwater soft-robot teleoperation simulator")]
pub struct RunConfig {
    #[arg(long, value_enum, default_value = "serve")]
    pub mode: Mode,
    /// Scene file; overrides the one named by the scenario.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// bridge | scripted:<path> | replay:<path>
    #[arg(long, value_parser = parse_controller)]
    pub controller: Option<ControllerArg>,
    #[arg(long, default_value = "0.02", value_parser = parse_dt)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = DEFAULT_BIND)]
    pub bind: String,
    /// Metrics output; `.csv` selects CSV, anything else JSON.
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    /// Write a replay file of the run.
    #[arg(long)]
    pub record_out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_CONFIG, message: message.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::Physics(_) => EXIT_RUNTIME,
            ScenarioError::ControllerDisconnected { .. } => EXIT_SCENARIO_FAILED,
            ScenarioError::Config(_) | ScenarioError::Controller(_) => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<ReplayError> for Failure {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::HashMismatch { .. } => Failure { code: EXIT_HASH_MISMATCH, message: e.to_string() },
            ReplayError::Scenario(s) => s.into(),
            _ => Failure::config(e),
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("MARUN_LOG", "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp_millis().try_init();
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_logging();
    match run(&config) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("marun: error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(main_with_args(std::env::args_os()))
}

fn run(config: &RunConfig) -> Result<u8, Failure> {
    match config.mode {
        Mode::Serve => serve(config),
        Mode::RunScenario => run_headless(config),
        Mode::Replay => run_replay(config),
    }
}

/// The scenario plus the scene it runs in (the `--scene` override if given).
fn load_task(config: &RunConfig) -> Result<(LoadedScenario, Scene), Failure> {
    let path = config.scenario.as_ref().ok_or_else(|| Failure::config(format!("--mode {} requires --scenario", mode_name(config.mode))))?;
    let loaded = load_scenario(path)?;
    let scene = match &config.scene {
        Some(p) => load_scene(p)?,
        None => loaded.scene()?,
    };
    Ok((loaded, scene))
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Serve => "serve",
        Mode::RunScenario => "run-scenario",
        Mode::Replay => "replay",
    }
}

fn bridge_config(config: &RunConfig, wait_for_client: bool) -> BridgeConfig {
    BridgeConfig { bind: config.bind.clone(), dt: config.dt, pacing: Pacing::RealTime, wait_for_client, ..Default::default() }
}

fn serve(config: &RunConfig) -> Result<u8, Failure> {
    match &config.controller {
        None | Some(ControllerArg::Bridge) => {}
        Some(_) => return Err(Failure::config("--mode serve only accepts --controller bridge")),
    }
    if config.scenario.is_some() {
        return run_live(config);
    }
    let scene = match &config.scene {
        Some(p) => load_scene(p)?,
        None => Scene::empty(),
    };
    let sim = scene.build_simulation(config.dt)?;
    let handle = bridge::start(Driver::Free(Box::new(sim)), bridge_config(config, false))
        .map_err(|e| Failure::config(format!("cannot bind {}: {e}", config.bind)))?;
    println!("serving on ws://{}", handle.local_addr());
    let outcome = handle.join();
    match outcome.error {
        Some(e) => Err(Failure { code: EXIT_RUNTIME, message: e.to_string() }),
        None => Ok(EXIT_OK),
    }
}

/// Scenario driven live by bridge clients. Starts with the first client and
/// aborts if every client leaves.
fn run_live(config: &RunConfig) -> Result<u8, Failure> {
    let (loaded, scene) = load_task(config)?;
    let effective = loaded.spec.effective_scene(&scene)?;
    let runner = ScenarioRunner::new(loaded.spec.clone(), &effective, config.dt)?;
    let handle = bridge::start(Driver::Scenario(Box::new(runner)), bridge_config(config, true))
        .map_err(|e| Failure::config(format!("cannot bind {}: {e}", config.bind)))?;
    println!("waiting for a client on ws://{}", handle.local_addr());
    let outcome = handle.join();
    if let Some(e) = outcome.error {
        return Err(Failure { code: EXIT_RUNTIME, message: e.to_string() });
    }
    let run = outcome.run.expect("scenario driver yields a run");
    finish_run(config, &loaded, &scene, &run)
}

fn run_headless(config: &RunConfig) -> Result<u8, Failure> {
    let controller = config.controller.clone().unwrap_or(ControllerArg::Bridge);
    if controller == ControllerArg::Bridge {
        return run_live(config);
    }
    let (loaded, scene) = load_task(config)?;
    let mut script = match controller {
        ControllerArg::Scripted(p) => ScriptedController::load(&p)?,
        ControllerArg::Replay(p) => ScriptedController::new(ReplayFile::read(&p)?.commands),
        ControllerArg::Bridge => unreachable!(),
    };
    let run = run_scenario(&loaded.spec, &scene, &mut script, config.dt)?;
    finish_run(config, &loaded, &scene, &run)
}

fn finish_run(config: &RunConfig, loaded: &LoadedScenario, scene: &Scene, run: &ScenarioRun) -> Result<u8, Failure> {
    let record = &run.record;
    if let Some(path) = &config.metrics_out {
        write_metrics(run, path)?;
    }
    if let Some(path) = &config.record_out {
        record_run(path, &loaded.spec, scene, config.dt, config.seed, run)?;
    }
    println!(
        "{}: success={} aborted={} t={:.2}s path_length={:.4}m steps={} hash={}",
        record.scenario.as_str(),
        record.success,
        record.aborted,
        record.time_to_completion,
        record.path_length,
        record.steps,
        record.final_state_hash
    );
    Ok(if record.success { EXIT_OK } else { EXIT_SCENARIO_FAILED })
}

fn write_metrics(run: &ScenarioRun, path: &Path) -> Result<(), Failure> {
    run.record
        .export(path, MetricsFormat::from_path(path))
        .map_err(|e| Failure { code: EXIT_RUNTIME, message: format!("cannot write metrics to {}: {e}", path.display()) })
}

fn run_replay(config: &RunConfig) -> Result<u8, Failure> {
    let Some(ControllerArg::Replay(path)) = &config.controller else {
        return Err(Failure::config("--mode replay requires --controller replay:<path>"));
    };
    let file = ReplayFile::read(path)?;
    let (loaded, scene) = load_task(config)?;
    let run = replay(&file, &loaded.spec, &scene, config.dt, config.seed)?;
    if let Some(out) = &config.metrics_out {
        write_metrics(&run, out)?;
    }
    println!("replay ok: {} steps, hash {}", run.record.steps, run.record.final_state_hash);
    Ok(EXIT_OK)
}
