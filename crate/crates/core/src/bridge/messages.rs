//! Outbound message bodies and the rate-limited frame publisher.
//!
//! Everything leaving the simulator is expressed in the render frame
//! (left-handed, Y-up, Z-forward). Poses use named fields so quaternion
//! order is never ambiguous.

use std::sync::Arc;

use serde::Serialize;

use crate::error::FrameError;
use crate::frames::{express, express_axial, express_vector, FrameConvention, Pose, UnitQuat, Vec3};
use crate::physics::ContactPhase;
use crate::scenario::ScenarioStatus;
use crate::sim::Snapshot;

use super::topics::{TopicKind, TOPICS, SCENARIO_STATE_HZ};

pub const WIRE_FRAME: FrameConvention = FrameConvention::Render;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Vector3Msg {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<Vec3> for Vector3Msg {
    fn from(v: Vec3) -> Self {
        Vector3Msg { x: v.x, y: v.y, z: v.z }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuaternionMsg {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<UnitQuat> for QuaternionMsg {
    fn from(q: UnitQuat) -> Self {
        QuaternionMsg { w: q.w, x: q.x, y: q.y, z: q.z }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoseMsg {
    pub position: Vector3Msg,
    pub orientation: QuaternionMsg,
}

/// Converts a sim-frame pose for the wire.
pub fn pose_msg(pose: &Pose) -> Result<PoseMsg, FrameError> {
    let p = express(pose, WIRE_FRAME)?.pose;
    Ok(PoseMsg { position: p.position.into(), orientation: p.orientation.into() })
}

pub fn vector_msg(v: Vec3) -> Result<Vector3Msg, FrameError> {
    Ok(express_vector(v, WIRE_FRAME)?.into())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    pub seq: u64,
    /// Simulation time, s.
    pub stamp: f64,
    pub step: u64,
    pub frame_id: &'static str,
}

#[derive(Serialize)]
pub struct SegmentsMsg {
    pub header: Header,
    pub limb: usize,
    pub segment_length: f64,
    pub segment_radius: f64,
    /// Segment axis in each pose's local frame.
    pub axis: Vector3Msg,
    pub poses: Vec<PoseMsg>,
}

#[derive(Serialize)]
pub struct HapticMsg {
    pub header: Header,
    pub limb: usize,
    /// N
    pub force: Vector3Msg,
    pub magnitude: f64,
}

#[derive(Serialize)]
pub struct TwistMsg {
    pub linear: Vector3Msg,
    pub angular: Vector3Msg,
}

#[derive(Serialize)]
pub struct OdomMsg {
    pub header: Header,
    pub pose: PoseMsg,
    pub twist: TwistMsg,
}

#[derive(Serialize)]
pub struct ContactMsg {
    pub phase: ContactPhase,
    pub body_a: String,
    pub body_b: String,
    pub point: Vector3Msg,
    pub normal: Vector3Msg,
    pub penetration: f64,
    pub impulse: f64,
    pub force: f64,
}

#[derive(Serialize)]
pub struct ContactsMsg {
    pub header: Header,
    pub events: Vec<ContactMsg>,
}

#[derive(Serialize)]
pub struct ClockMsg {
    pub header: Header,
    pub sim_time: f64,
}

#[derive(Serialize)]
pub struct ScenarioStateMsg {
    pub header: Header,
    pub phase: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub status: Option<ScenarioStatusBody>,
}

#[derive(Serialize)]
pub struct ScenarioStatusBody {
    pub kind: &'static str,
    pub time: f64,
    pub time_limit: f64,
    pub success: bool,
    pub path_length: f64,
    pub attached: bool,
}

#[derive(Serialize)]
struct PublishFrame<'a, M: Serialize> {
    op: &'static str,
    topic: &'a str,
    msg: &'a M,
}

pub fn publish_frame<M: Serialize>(topic: &str, msg: &M) -> String {
    serde_json::to_string(&PublishFrame { op: "publish", topic, msg }).expect("message serializes")
}

/// Segment axis: sim-local +Z, which the frame mapping turns into +Y.
pub fn segment_axis() -> Vector3Msg {
    Vector3Msg { x: 0.0, y: 1.0, z: 0.0 }
}

fn phase_name(status: Option<&ScenarioStatus>) -> String {
    match status {
        None => "idle".into(),
        Some(s) => serde_json::to_value(s.phase).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
    }
}

fn status_key(status: Option<&ScenarioStatus>) -> (String, bool, bool) {
    (phase_name(status), status.is_some_and(|s| s.success), status.is_some_and(|s| s.attached))
}

/// Builds frames for each snapshot, applying per-topic rate limits and
/// stamping a per-topic sequence number.
#[derive(Debug)]
pub struct Publisher {
    seq: Vec<u64>,
    last_slot: Vec<Option<u64>>,
    last_status: Option<(String, bool, bool)>,
}

impl Default for Publisher {
    fn default() -> Self {
        Publisher { seq: vec![0; TOPICS.len()], last_slot: vec![None; TOPICS.len()], last_status: None }
    }
}

/// Rate slot of a step: a topic publishes when the slot index advances.
fn slot(step: u64, dt: f64, rate_hz: f64) -> u64 {
    ((step as f64) * dt * rate_hz + 1e-9).floor() as u64
}

impl Publisher {
    /// Frames due for this snapshot. `wanted(i)` says whether anyone listens
    /// on topic `i`; unwanted frames are not built but still consume their slot.
    pub fn frames(
        &mut self,
        snap: &Snapshot,
        dt: f64,
        status: Option<&ScenarioStatus>,
        wanted: impl Fn(usize) -> bool,
    ) -> Result<Vec<(usize, Arc<str>)>, FrameError> {
        let mut out = Vec::new();
        for (i, spec) in TOPICS.iter().enumerate() {
            let due = match spec.kind {
                TopicKind::LimbCmd(_) | TopicKind::VehicleCmd => false,
                TopicKind::Contacts => !snap.contacts.is_empty(),
                TopicKind::ScenarioState => {
                    let key = status_key(status);
                    let changed = self.last_status.as_ref() != Some(&key);
                    let s = slot(snap.step, dt, SCENARIO_STATE_HZ);
                    let periodic = self.last_slot[i] != Some(s);
                    if changed || periodic {
                        self.last_status = Some(key);
                        self.last_slot[i] = Some(s);
                        true
                    } else {
                        false
                    }
                }
                _ => {
                    let s = slot(snap.step, dt, spec.rate_hz.expect("periodic topic"));
                    let due = self.last_slot[i] != Some(s);
                    self.last_slot[i] = Some(s);
                    due
                }
            };
            if !due {
                continue;
            }
            self.seq[i] += 1;
            if !wanted(i) {
                continue;
            }
            let header = Header { seq: self.seq[i], stamp: snap.time, step: snap.step, frame_id: WIRE_FRAME.as_str() };
            let frame = build(spec.name, spec.kind, header, snap, status)?;
            out.push((i, Arc::from(frame)));
        }
        Ok(out)
    }
}

fn build(topic: &str, kind: TopicKind, header: Header, snap: &Snapshot, status: Option<&ScenarioStatus>) -> Result<String, FrameError> {
    Ok(match kind {
        TopicKind::LimbSegments(limb) => publish_frame(
            topic,
            &SegmentsMsg {
                header,
                limb,
                segment_length: snap.segment_length[limb],
                segment_radius: snap.segment_radius[limb],
                axis: segment_axis(),
                poses: snap.segments[limb].iter().map(pose_msg).collect::<Result<_, _>>()?,
            },
        ),
        TopicKind::Haptic(limb) => {
            let f = snap.tip_forces[limb];
            publish_frame(topic, &HapticMsg { header, limb, force: vector_msg(f)?, magnitude: f.norm() })
        }
        TopicKind::VehicleOdom => {
            let v = &snap.vehicle;
            publish_frame(
                topic,
                &OdomMsg {
                    header,
                    pose: pose_msg(&v.pose)?,
                    twist: TwistMsg {
                        linear: vector_msg(v.linear_velocity)?,
                        angular: express_axial(v.angular_velocity, WIRE_FRAME)?.into(),
                    },
                },
            )
        }
        TopicKind::Contacts => {
            let events = snap
                .contacts
                .iter()
                .map(|c| {
                    Ok(ContactMsg {
                        phase: c.phase,
                        body_a: c.body_a.clone(),
                        body_b: c.body_b.clone(),
                        point: vector_msg(c.point)?,
                        normal: vector_msg(c.normal)?,
                        penetration: c.penetration,
                        impulse: c.impulse,
                        force: c.force,
                    })
                })
                .collect::<Result<_, FrameError>>()?;
            publish_frame(topic, &ContactsMsg { header, events })
        }
        TopicKind::Clock => publish_frame(topic, &ClockMsg { header, sim_time: snap.time }),
        TopicKind::ScenarioState => publish_frame(
            topic,
            &ScenarioStateMsg {
                header,
                phase: phase_name(status),
                status: status.map(|s| ScenarioStatusBody {
                    kind: s.kind.as_str(),
                    time: s.time,
                    time_limit: s.time_limit,
                    success: s.success,
                    path_length: s.path_length,
                    attached: s.attached,
                }),
            },
        ),
        TopicKind::LimbCmd(_) | TopicKind::VehicleCmd => unreachable!("inbound topics are never published"),
    })
}
