//! Fixed topic registry and the inbound command schemas.

use serde_json::{Map, Value};

use crate::limb::LIMB_COUNT;
use crate::sim::Command;
use crate::vehicle::PropulsionCommand;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Simulation → clients.
    Outbound,
    /// Clients → simulation.
    Inbound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopicKind {
    LimbCmd(usize),
    LimbSegments(usize),
    Haptic(usize),
    VehicleCmd,
    VehicleOdom,
    Contacts,
    Clock,
    ScenarioState,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopicSpec {
    pub name: &'static str,
    pub msg_type: &'static str,
    pub direction: Direction,
    /// Publication rate for periodic outbound topics; `None` for inbound and event-driven ones.
    pub rate_hz: Option<f64>,
    pub kind: TopicKind,
}

pub const SEGMENTS_HZ: f64 = 50.0;
pub const HAPTIC_HZ: f64 = 50.0;
pub const ODOM_HZ: f64 = 20.0;
pub const CLOCK_HZ: f64 = 10.0;
/// Scenario state is published on change and re-sent at this rate.
pub const SCENARIO_STATE_HZ: f64 = 1.0;

const fn spec(name: &'static str, msg_type: &'static str, direction: Direction, rate_hz: Option<f64>, kind: TopicKind) -> TopicSpec {
    TopicSpec { name, msg_type, direction, rate_hz, kind }
}

use Direction::{Inbound, Outbound};

pub static TOPICS: [TopicSpec; 15] = [
    spec("/ursula/limb/0/cmd", "ursula/LimbCommand", Inbound, None, TopicKind::LimbCmd(0)),
    spec("/ursula/limb/1/cmd", "ursula/LimbCommand", Inbound, None, TopicKind::LimbCmd(1)),
    spec("/ursula/limb/2/cmd", "ursula/LimbCommand", Inbound, None, TopicKind::LimbCmd(2)),
    spec("/ursula/limb/3/cmd", "ursula/LimbCommand", Inbound, None, TopicKind::LimbCmd(3)),
    spec("/ursula/limb/0/segments", "ursula/LimbSegments", Outbound, Some(SEGMENTS_HZ), TopicKind::LimbSegments(0)),
    spec("/ursula/limb/1/segments", "ursula/LimbSegments", Outbound, Some(SEGMENTS_HZ), TopicKind::LimbSegments(1)),
    spec("/ursula/limb/2/segments", "ursula/LimbSegments", Outbound, Some(SEGMENTS_HZ), TopicKind::LimbSegments(2)),
    spec("/ursula/limb/3/segments", "ursula/LimbSegments", Outbound, Some(SEGMENTS_HZ), TopicKind::LimbSegments(3)),
    spec("/ursula/limb/0/haptic", "ursula/TipForce", Outbound, Some(HAPTIC_HZ), TopicKind::Haptic(0)),
    spec("/ursula/limb/1/haptic", "ursula/TipForce", Outbound, Some(HAPTIC_HZ), TopicKind::Haptic(1)),
    spec("/ursula/vehicle/cmd", "ursula/VehicleCommand", Inbound, None, TopicKind::VehicleCmd),
    spec("/ursula/vehicle/odom", "ursula/Odometry", Outbound, Some(ODOM_HZ), TopicKind::VehicleOdom),
    spec("/ursula/contacts", "ursula/ContactEvents", Outbound, None, TopicKind::Contacts),
    spec("/marun/clock", "marun/Clock", Outbound, Some(CLOCK_HZ), TopicKind::Clock),
    spec("/marun/scenario/state", "marun/ScenarioState", Outbound, None, TopicKind::ScenarioState),
];

pub fn lookup(name: &str) -> Option<&'static TopicSpec> {
    TOPICS.iter().find(|t| t.name == name)
}

pub fn registered() -> impl Iterator<Item = &'static TopicSpec> {
    TOPICS.iter()
}

pub fn index_of(name: &str) -> Option<usize> {
    TOPICS.iter().position(|t| t.name == name)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CommandError {
    UnknownTopic(String),
    WrongDirection(String),
    Schema { topic: String, field: String, detail: String },
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::UnknownTopic(t) => write!(f, "unknown topic: {t}"),
            CommandError::WrongDirection(t) => write!(f, "wrong direction: {t} is published by the simulator"),
            CommandError::Schema { topic, field, detail } => write!(f, "invalid msg for {topic}: field '{field}' {detail}"),
        }
    }
}

impl std::error::Error for CommandError {}

fn schema(topic: &str, field: &str, detail: &str) -> CommandError {
    CommandError::Schema { topic: topic.into(), field: field.into(), detail: detail.into() }
}

fn as_object<'a>(topic: &str, msg: &'a Value) -> Result<&'a Map<String, Value>, CommandError> {
    msg.as_object().ok_or_else(|| schema(topic, "msg", "must be an object"))
}

fn reject_unknown(topic: &str, obj: &Map<String, Value>, allowed: &[&str]) -> Result<(), CommandError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(topic, k, "is not part of the schema")),
        None => Ok(()),
    }
}

fn finite(topic: &str, field: &str, v: &Value) -> Result<f64, CommandError> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| schema(topic, field, "must be a finite number"))
}

/// Validates an inbound publish and turns it into a simulation command.
pub fn parse_command(topic: &str, msg: &Value) -> Result<Command, CommandError> {
    let spec = lookup(topic).ok_or_else(|| CommandError::UnknownTopic(topic.into()))?;
    if spec.direction != Direction::Inbound {
        return Err(CommandError::WrongDirection(topic.into()));
    }
    let obj = as_object(topic, msg)?;
    match spec.kind {
        TopicKind::LimbCmd(limb) => {
            debug_assert!(limb < LIMB_COUNT);
            reject_unknown(topic, obj, &["axes", "grip"])?;
            let axes = obj.get("axes").ok_or_else(|| schema(topic, "axes", "is required"))?;
            let arr = axes
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| schema(topic, "axes", "must be an array of 2 numbers"))?;
            let axes = [finite(topic, "axes", &arr[0])?, finite(topic, "axes", &arr[1])?];
            let grip = match obj.get("grip") {
                None | Some(Value::Null) => None,
                Some(Value::Bool(b)) => Some(*b),
                Some(_) => return Err(schema(topic, "grip", "must be a boolean")),
            };
            Ok(Command::Limb { limb, axes, grip })
        }
        TopicKind::VehicleCmd => {
            const FIELDS: [&str; 4] = ["surge", "sway", "heave", "yaw_rate"];
            reject_unknown(topic, obj, &FIELDS)?;
            let mut v = [0.0; 4];
            for (slot, name) in v.iter_mut().zip(FIELDS) {
                if let Some(x) = obj.get(name) {
                    *slot = finite(topic, name, x)?;
                }
            }
            Ok(Command::Vehicle(PropulsionCommand::from_array(v).clamped()))
        }
        _ => unreachable!("inbound topics are limb and vehicle commands"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn table_has_one_direction_per_topic() {
        let names: Vec<_> = registered().map(|t| t.name).collect();
        assert_eq!(names.len(), 15);
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), names.len());
        for t in registered() {
            assert!(t.name.starts_with('/'));
            assert_eq!(t.direction == Direction::Inbound, t.rate_hz.is_none() && t.name.ends_with("cmd"));
        }
    }

    #[test]
    fn limb_command_parses() {
        let c = parse_command("/ursula/limb/2/cmd", &json!({"axes": [0.5, -1.0]})).unwrap();
        assert_eq!(c, Command::Limb { limb: 2, axes: [0.5, -1.0], grip: None });
        let c = parse_command("/ursula/limb/0/cmd", &json!({"axes": [0, 0], "grip": true})).unwrap();
        assert_eq!(c, Command::Limb { limb: 0, axes: [0.0, 0.0], grip: Some(true) });
    }

    #[test]
    fn vehicle_command_defaults_and_clamps() {
        let c = parse_command("/ursula/vehicle/cmd", &json!({"surge": 2.0, "yaw_rate": -0.25})).unwrap();
        assert_eq!(c, Command::Vehicle(PropulsionCommand::new(1.0, 0.0, 0.0, -0.25)));
    }

    #[test]
    fn errors_are_distinct() {
        let e1 = parse_command("/nope", &json!({})).unwrap_err();
        let e2 = parse_command("/ursula/vehicle/odom", &json!({})).unwrap_err();
        let e3 = parse_command("/ursula/limb/0/cmd", &json!({"axes": [1]})).unwrap_err();
        let e4 = parse_command("/ursula/limb/0/cmd", &json!({"axes": [1, 0], "speed": 1})).unwrap_err();
        assert!(matches!(e1, CommandError::UnknownTopic(_)));
        assert!(matches!(e2, CommandError::WrongDirection(_)));
        assert!(e3.to_string().contains("'axes'"));
        assert!(e4.to_string().contains("'speed'"));
    }
}
