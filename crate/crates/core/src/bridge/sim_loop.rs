//! Fixed-rate simulation thread.
//!
//! The loop owns the simulation. Commands arrive over a channel and are
//! applied at the next step boundary (last writer wins per topic within a
//! step). Snapshots are handed to the publisher with a non-blocking send, so
//! no client can stall stepping.

use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{Receiver, TryRecvError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use tokio::sync::mpsc::Sender;

use crate::error::PhysicsError;
use crate::scenario::{ScenarioRun, ScenarioRunner, ScenarioStatus};
use crate::sim::{Simulation, Snapshot};

use super::hub::Hub;
use super::protocol::InboundCommand;

pub enum Driver {
    /// Free-running world with no task evaluation.
    Free(Box<Simulation>),
    /// Live scenario run; ends when the task finishes.
    Scenario(Box<ScenarioRunner>),
}

impl Driver {
    fn step_index(&self) -> u64 {
        match self {
            Driver::Free(s) => s.step_index(),
            Driver::Scenario(r) => r.step_index(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pacing {
    /// One step per `dt` of wall time.
    RealTime,
    /// Step as fast as possible.
    Unpaced,
}

/// Published state for one step.
pub struct Tick {
    pub snapshot: Snapshot,
    pub status: Option<ScenarioStatus>,
}

const PROBE_CAPACITY: usize = 1 << 16;

/// Timing record shared with observers: when each step's snapshot was
/// handed to the publisher, and the wall-clock interval between step starts.
#[derive(Default)]
pub struct LoopProbe {
    published: Mutex<VecDeque<(u64, Instant)>>,
    periods: Mutex<VecDeque<Duration>>,
    dropped_ticks: Mutex<u64>,
}

impl LoopProbe {
    fn record_publish(&self, step: u64, at: Instant) {
        let mut q = self.published.lock().expect("probe lock");
        if q.len() == PROBE_CAPACITY {
            q.pop_front();
        }
        q.push_back((step, at));
    }

    fn record_period(&self, d: Duration) {
        let mut q = self.periods.lock().expect("probe lock");
        if q.len() == PROBE_CAPACITY {
            q.pop_front();
        }
        q.push_back(d);
    }

    /// Instant at which the snapshot for `step` was produced.
    pub fn published_at(&self, step: u64) -> Option<Instant> {
        let q = self.published.lock().expect("probe lock");
        let first = q.front()?.0;
        let i = step.checked_sub(first)? as usize;
        q.get(i).filter(|(s, _)| *s == step).map(|(_, t)| *t)
    }

    /// Step-start intervals recorded so far.
    pub fn periods(&self) -> Vec<Duration> {
        self.periods.lock().expect("probe lock").iter().copied().collect()
    }

    pub fn clear_periods(&self) {
        self.periods.lock().expect("probe lock").clear();
    }

    /// Ticks the publisher could not accept.
    pub fn dropped_ticks(&self) -> u64 {
        *self.dropped_ticks.lock().expect("probe lock")
    }
}

/// How the loop ended.
pub struct LoopOutcome {
    pub steps: u64,
    pub run: Option<ScenarioRun>,
    pub error: Option<PhysicsError>,
}

pub(crate) struct LoopParams {
    pub dt: f64,
    pub pacing: Pacing,
    pub wait_for_client: bool,
}

pub(crate) struct LoopContext {
    pub commands: Receiver<InboundCommand>,
    pub ticks: Sender<Tick>,
    pub hub: Arc<Hub>,
    pub probe: Arc<LoopProbe>,
    pub shutdown: Arc<AtomicBool>,
}

/// Sleeps most of the way to `deadline`, then spins for the remainder.
fn wait_until(deadline: Instant) {
    const SPIN: Duration = Duration::from_micros(1500);
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        let left = deadline - now;
        if left > SPIN {
            std::thread::sleep(left - SPIN);
        } else {
            std::hint::spin_loop();
        }
    }
}

/// Collects pending commands, keeping the last one per topic.
fn drain_commands(rx: &Receiver<InboundCommand>) -> BTreeMap<&'static str, InboundCommand> {
    let mut latest = BTreeMap::new();
    loop {
        match rx.try_recv() {
            Ok(c) => {
                latest.insert(c.topic, c);
            }
            Err(TryRecvError::Empty | TryRecvError::Disconnected) => return latest,
        }
    }
}

pub(crate) fn run_loop(mut driver: Driver, params: LoopParams, ctx: LoopContext) -> LoopOutcome {
    let period = Duration::from_secs_f64(params.dt);
    if params.wait_for_client {
        while ctx.hub.session_count() == 0 && !ctx.shutdown.load(Ordering::Acquire) {
            std::thread::sleep(Duration::from_millis(2));
        }
        log::info!("client connected; starting");
    }
    let mut deadline = Instant::now();
    let mut last_start: Option<Instant> = None;
    let mut error = None;

    while !ctx.shutdown.load(Ordering::Acquire) {
        if params.pacing == Pacing::RealTime {
            wait_until(deadline);
            deadline += period;
            // Fell far behind (e.g. suspended): resynchronise instead of bursting.
            let now = Instant::now();
            if now > deadline + period * 10 {
                deadline = now + period;
            }
        }
        let start = Instant::now();
        if let Some(prev) = last_start {
            ctx.probe.record_period(start - prev);
        }
        last_start = Some(start);

        let commands = drain_commands(&ctx.commands);
        let stepped = match &mut driver {
            Driver::Free(sim) => {
                for c in commands.values() {
                    sim.apply(&c.command);
                }
                sim.step(&[]).map(|_| ())
            }
            Driver::Scenario(runner) => {
                if ctx.hub.ever_connected() && ctx.hub.session_count() == 0 {
                    log::warn!("all clients disconnected at step {}; aborting", runner.step_index());
                    runner.abort();
                }
                for c in commands.into_values() {
                    // Already validated by the protocol layer.
                    if let Err(e) = runner.submit(c.topic, c.msg) {
                        log::warn!("dropped command: {e}");
                    }
                }
                runner.advance().map(|_| ())
            }
        };
        if let Err(e) = stepped {
            log::error!("{e}");
            error = Some(e);
            break;
        }

        let tick = match &driver {
            Driver::Free(sim) => Tick { snapshot: sim.snapshot(), status: None },
            Driver::Scenario(r) => Tick { snapshot: r.sim().snapshot(), status: Some(r.status()) },
        };
        let step = tick.snapshot.step;
        ctx.probe.record_publish(step, Instant::now());
        if ctx.ticks.try_send(tick).is_err() {
            *ctx.probe.dropped_ticks.lock().expect("probe lock") += 1;
        }

        if let Driver::Scenario(r) = &driver {
            if r.is_finished() {
                break;
            }
        }
    }

    let steps = driver.step_index();
    let run = match driver {
        Driver::Free(_) => None,
        Driver::Scenario(mut r) => {
            r.abort();
            Some((*r).finish())
        }
    };
    LoopOutcome { steps, run, error }
}
