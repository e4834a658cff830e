//! rosbridge v2 envelope subset: advertise, unadvertise, subscribe,
//! unsubscribe and publish. Errors come back as status frames and never end
//! the session.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bridge::topics::{index_of, parse_command, CommandError, Direction, TOPICS};
use crate::sim::Command;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Advertise,
    Unadvertise,
    Subscribe,
    Unsubscribe,
    Publish,
}

impl Op {
    pub fn parse(s: &str) -> Option<Op> {
        Some(match s {
            "advertise" => Op::Advertise,
            "unadvertise" => Op::Unadvertise,
            "subscribe" => Op::Subscribe,
            "unsubscribe" => Op::Unsubscribe,
            "publish" => Op::Publish,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub op: Op,
    pub topic: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub msg_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msg: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl Envelope {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProtocolError {
    MalformedJson,
    NotAnObject,
    MissingField(&'static str),
    FieldType(&'static str, &'static str),
    UnknownOp(String),
    InvalidTopic(String),
    UnknownTopic(String),
    PublishToOutbound(String),
    SubscribeToInbound(String),
    TypeMismatch { topic: String, expected: &'static str },
    Schema(CommandError),
    BinaryFrame,
}

impl std::fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProtocolError::MalformedJson => write!(f, "malformed JSON"),
            ProtocolError::NotAnObject => write!(f, "envelope must be a JSON object"),
            ProtocolError::MissingField(name) => write!(f, "missing field '{name}'"),
            ProtocolError::FieldType(name, ty) => write!(f, "field '{name}' must be {ty}"),
            ProtocolError::UnknownOp(op) => write!(f, "unknown op: {op}"),
            ProtocolError::InvalidTopic(t) => write!(f, "invalid topic: {t:?} (must start with '/')"),
            ProtocolError::UnknownTopic(t) => write!(f, "unknown topic: {t}"),
            ProtocolError::PublishToOutbound(t) => write!(f, "wrong direction: {t} is published by the simulator"),
            ProtocolError::SubscribeToInbound(t) => write!(f, "wrong direction: {t} is a command topic"),
            ProtocolError::TypeMismatch { topic, expected } => write!(f, "type mismatch for {topic}: expected {expected}"),
            ProtocolError::Schema(e) => write!(f, "{e}"),
            ProtocolError::BinaryFrame => write!(f, "binary frames are not supported"),
        }
    }
}

impl std::error::Error for ProtocolError {}

#[derive(Serialize)]
struct Status<'a> {
    op: &'static str,
    level: &'a str,
    msg: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<&'a str>,
}

/// `{"op":"status","level":…,"msg":…,"id":…}`
pub fn status_frame(level: &str, msg: &str, id: Option<&str>) -> String {
    serde_json::to_string(&Status { op: "status", level, msg, id }).expect("status serializes")
}

pub fn error_frame(err: &ProtocolError, id: Option<&str>) -> String {
    status_frame("error", &err.to_string(), id)
}

/// Per-connection protocol state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Session {
    pub id: u64,
    /// Topic-table indices.
    pub subscriptions: BTreeSet<usize>,
    pub advertised: BTreeSet<usize>,
    pub frames_in: u64,
    pub errors: u64,
}

impl Session {
    pub fn new(id: u64) -> Self {
        Session { id, ..Default::default() }
    }

    pub fn is_subscribed(&self, topic: &str) -> bool {
        index_of(topic).is_some_and(|i| self.subscriptions.contains(&i))
    }
}

/// A validated publish on a command topic.
#[derive(Clone, Debug, PartialEq)]
pub struct InboundCommand {
    pub topic: &'static str,
    pub msg: Value,
    pub command: Command,
}

/// Result of one inbound text frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Handled {
    /// Frame to send back to this client, if any.
    pub response: Option<String>,
    pub command: Option<InboundCommand>,
}

fn str_field<'a>(obj: &'a serde_json::Map<String, Value>, name: &'static str) -> Result<Option<&'a str>, ProtocolError> {
    match obj.get(name) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(ProtocolError::FieldType(name, "a string")),
    }
}

/// Parses and validates an envelope (shape, op, topic syntax); does not
/// consult the topic table.
pub fn parse_envelope(text: &str) -> Result<Envelope, (ProtocolError, Option<String>)> {
    let value: Value = serde_json::from_str(text).map_err(|_| (ProtocolError::MalformedJson, None))?;
    let obj = value.as_object().ok_or((ProtocolError::NotAnObject, None))?;
    let id = match str_field(obj, "id") {
        Ok(id) => id.map(str::to_owned),
        Err(e) => return Err((e, None)),
    };
    let fail = |e: ProtocolError| (e, id.clone());
    let op = str_field(obj, "op").map_err(fail)?.ok_or_else(|| fail(ProtocolError::MissingField("op")))?;
    let op = Op::parse(op).ok_or_else(|| fail(ProtocolError::UnknownOp(op.to_owned())))?;
    let topic = str_field(obj, "topic").map_err(fail)?.ok_or_else(|| fail(ProtocolError::MissingField("topic")))?;
    if !topic.starts_with('/') {
        return Err(fail(ProtocolError::InvalidTopic(topic.to_owned())));
    }
    let msg_type = str_field(obj, "type").map_err(fail)?.map(str::to_owned);
    let msg = obj.get("msg").cloned();
    Ok(Envelope { op, topic: topic.to_owned(), msg_type, msg, id })
}

fn apply(session: &mut Session, env: Envelope) -> Result<Option<InboundCommand>, ProtocolError> {
    let index = index_of(&env.topic).ok_or_else(|| ProtocolError::UnknownTopic(env.topic.clone()))?;
    let spec = &TOPICS[index];
    if let Some(t) = &env.msg_type {
        if t != spec.msg_type {
            return Err(ProtocolError::TypeMismatch { topic: env.topic, expected: spec.msg_type });
        }
    }
    match (env.op, spec.direction) {
        (Op::Subscribe | Op::Unsubscribe, Direction::Inbound) => Err(ProtocolError::SubscribeToInbound(env.topic)),
        (Op::Advertise | Op::Unadvertise | Op::Publish, Direction::Outbound) => {
            Err(ProtocolError::PublishToOutbound(env.topic))
        }
        (Op::Subscribe, _) => {
            session.subscriptions.insert(index);
            Ok(None)
        }
        (Op::Unsubscribe, _) => {
            session.subscriptions.remove(&index);
            Ok(None)
        }
        (Op::Advertise, _) => {
            session.advertised.insert(index);
            Ok(None)
        }
        (Op::Unadvertise, _) => {
            session.advertised.remove(&index);
            Ok(None)
        }
        (Op::Publish, _) => {
            let msg = env.msg.ok_or(ProtocolError::MissingField("msg"))?;
            let command = parse_command(spec.name, &msg).map_err(ProtocolError::Schema)?;
            Ok(Some(InboundCommand { topic: spec.name, msg, command }))
        }
    }
}

/// Handles one inbound text frame for `session`.
pub fn handle_envelope(session: &mut Session, text: &str) -> Handled {
    session.frames_in += 1;
    let outcome = parse_envelope(text).and_then(|env| {
        let id = env.id.clone();
        apply(session, env).map_err(|e| (e, id))
    });
    match outcome {
        Ok(command) => Handled { response: None, command },
        Err((err, id)) => {
            session.errors += 1;
            Handled { response: Some(error_frame(&err, id.as_deref())), command: None }
        }
    }
}

/// Response to a binary WebSocket frame.
pub fn handle_binary(session: &mut Session) -> Handled {
    session.frames_in += 1;
    session.errors += 1;
    Handled { response: Some(error_frame(&ProtocolError::BinaryFrame, None)), command: None }
}
