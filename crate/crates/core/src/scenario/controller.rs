//! Command sources for scenario runs.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::mpsc::{Receiver, TryRecvError};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ScenarioError;

/// One command as it appears on the wire, stamped with the step it applies to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCommand {
    pub step: u64,
    pub topic: String,
    pub msg: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Poll {
    Commands(Vec<WireCommand>),
    Disconnected,
}

pub trait Controller {
    /// Commands to apply before step `step` is simulated.
    fn poll(&mut self, step: u64) -> Result<Poll, ScenarioError>;
}

/// Sends nothing; the robot stays at rest.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdleController;

impl Controller for IdleController {
    fn poll(&mut self, _step: u64) -> Result<Poll, ScenarioError> {
        Ok(Poll::Commands(Vec::new()))
    }
}

/// Precomputed command stream. Commands are delivered at their step, in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScriptedController {
    pending: VecDeque<WireCommand>,
}

impl ScriptedController {
    pub fn new(mut commands: Vec<WireCommand>) -> Self {
        // stable: equal steps keep file order
        commands.sort_by_key(|c| c.step);
        ScriptedController { pending: commands.into() }
    }

    /// JSON lines of `{step, topic, msg}`; blank lines and `//` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut commands = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            let cmd: WireCommand = serde_json::from_str(line)
                .map_err(|e| ScenarioError::Controller(format!("script line {}: {e}", i + 1)))?;
            commands.push(cmd);
        }
        Ok(Self::new(commands))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Controller(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn remaining(&self) -> usize {
        self.pending.len()
    }
}

impl Controller for ScriptedController {
    fn poll(&mut self, step: u64) -> Result<Poll, ScenarioError> {
        let mut out = Vec::new();
        while self.pending.front().is_some_and(|c| c.step <= step) {
            out.push(self.pending.pop_front().expect("front checked"));
        }
        Ok(Poll::Commands(out))
    }
}

/// Message from a live command source (the bridge).
#[derive(Clone, Debug, PartialEq)]
pub enum ControlMessage {
    Command { topic: String, msg: Value },
    Disconnected,
}

/// Live commands from a channel, stamped with the step they arrive at.
pub struct ChannelController {
    rx: Receiver<ControlMessage>,
}

impl ChannelController {
    pub fn new(rx: Receiver<ControlMessage>) -> Self {
        ChannelController { rx }
    }
}

impl Controller for ChannelController {
    fn poll(&mut self, step: u64) -> Result<Poll, ScenarioError> {
        let mut out = Vec::new();
        loop {
            match self.rx.try_recv() {
                Ok(ControlMessage::Command { topic, msg }) => out.push(WireCommand { step, topic, msg }),
                Ok(ControlMessage::Disconnected) | Err(TryRecvError::Disconnected) => return Ok(Poll::Disconnected),
                Err(TryRecvError::Empty) => return Ok(Poll::Commands(out)),
            }
        }
    }
}
