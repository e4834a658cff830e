//! Tendon-driven soft limbs.
//!
//! Each limb is a chain of `N` rigid segments. A joint sits at the proximal
//! end of every segment. Four tendons run at 0°, 90°, 180° and 270° around
//! the cross-section at moment arm `r`; their differential tension produces
//! a bending moment that every joint balances with its spring, so under
//! uniform tension all joints bend by the same angle toward the same
//! azimuth and the chain vertices lie on a circle.
//!
//! Limb-base frame: the limb grows along +Z, tendon 0 sits on +X and
//! tendon 1 on +Y.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::FrameError;
use crate::frames::{compose_unchecked, express, FrameConvention, Pose, TaggedPose, UnitQuat, Vec3};
use crate::physics::{BodyId, ContactEvent};

pub const TENDON_COUNT: usize = 4;
pub const LIMB_COUNT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimbId {
    Arm1,
    Arm2,
    TentacleCam,
    TentacleLight,
}

impl LimbId {
    pub const ALL: [LimbId; LIMB_COUNT] = [LimbId::Arm1, LimbId::Arm2, LimbId::TentacleCam, LimbId::TentacleLight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<LimbId> {
        LimbId::ALL.get(i).copied()
    }

    /// Arms carry the tip force sensors.
    pub fn is_arm(self) -> bool {
        matches!(self, LimbId::Arm1 | LimbId::Arm2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimbConfig {
    pub limb_id: LimbId,
    pub segment_count: usize,
    /// m
    pub total_length: f64,
    /// m
    pub segment_radius: f64,
    /// Per joint, N·m/rad.
    pub joint_stiffness: f64,
    /// Per joint, N·m·s/rad. Zero makes the shape follow the tendons instantly.
    pub joint_damping: f64,
    /// m
    pub tendon_moment_arm: f64,
    /// N
    pub max_tendon_tension: f64,
    /// Largest total bend, rad.
    pub max_bend: f64,
    /// Slew limit on the commanded bend magnitude, rad/s.
    pub max_bend_rate: f64,
    /// Limb base on the head, in the vehicle body frame.
    pub base_pose: Pose,
}

pub const DEFAULT_SEGMENTS: usize = 12;
pub const DEFAULT_LENGTH: f64 = 0.600;
pub const DEFAULT_MOMENT_ARM: f64 = 0.015;
pub const DEFAULT_MAX_TENSION: f64 = 20.0;

impl Default for LimbConfig {
    fn default() -> Self {
        let n = DEFAULT_SEGMENTS;
        LimbConfig {
            limb_id: LimbId::Arm1,
            segment_count: n,
            total_length: DEFAULT_LENGTH,
            segment_radius: 0.02,
            // one tendon at full tension bends the limb by pi
            joint_stiffness: n as f64 * DEFAULT_MAX_TENSION * DEFAULT_MOMENT_ARM / PI,
            joint_damping: 0.0,
            tendon_moment_arm: DEFAULT_MOMENT_ARM,
            max_tendon_tension: DEFAULT_MAX_TENSION,
            max_bend: PI,
            max_bend_rate: PI / 2.0,
            base_pose: Pose::IDENTITY,
        }
    }
}

impl LimbConfig {
    pub fn for_limb(limb_id: LimbId, base_pose: Pose) -> Self {
        LimbConfig { limb_id, base_pose, ..Default::default() }
    }

    pub fn segment_length(&self) -> f64 {
        self.total_length / self.segment_count as f64
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.segment_count < 3 {
            return Err(format!("segment_count must be >= 3, got {}", self.segment_count));
        }
        let positive = [
            ("total_length", self.total_length),
            ("segment_radius", self.segment_radius),
            ("joint_stiffness", self.joint_stiffness),
            ("tendon_moment_arm", self.tendon_moment_arm),
            ("max_tendon_tension", self.max_tendon_tension),
            ("max_bend", self.max_bend),
            ("max_bend_rate", self.max_bend_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be > 0, got {v}"));
            }
        }
        if !(self.joint_damping >= 0.0 && self.joint_damping.is_finite()) {
            return Err(format!("joint_damping must be >= 0, got {}", self.joint_damping));
        }
        self.base_pose.validate().map_err(|e| e.to_string())
    }
}

/// Tendon tensions in N, indexed by tendon angle 0°, 90°, 180°, 270°.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TendonCommand {
    pub tensions: [f64; TENDON_COUNT],
}

impl TendonCommand {
    /// Clamps each tension into `[0, max]`; non-finite values become 0.
    pub fn clamped(tensions: [f64; TENDON_COUNT], max: f64) -> Self {
        TendonCommand { tensions: tensions.map(|t| if t.is_finite() { t.clamp(0.0, max) } else { 0.0 }) }
    }

    /// Differential tension on the (0, 180°) and (90°, 270°) pairs.
    pub fn differential(&self) -> [f64; 2] {
        [self.tensions[0] - self.tensions[2], self.tensions[1] - self.tensions[3]]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DesiredShape {
    /// Direction of the bending plane, rad (0 = toward tendon 0).
    pub bend_azimuth: f64,
    /// Total bend along the limb, rad (0 = straight).
    pub bend_magnitude: f64,
    /// Optional tip position goal in the limb-base frame, m.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tip_target: Option<Vec3>,
}

impl DesiredShape {
    pub const STRAIGHT: DesiredShape = DesiredShape { bend_azimuth: 0.0, bend_magnitude: 0.0, tip_target: None };

    pub fn bend(azimuth: f64, magnitude: f64) -> Self {
        DesiredShape { bend_azimuth: azimuth, bend_magnitude: magnitude, tip_target: None }
    }

    pub fn toward(tip_target: Vec3) -> Self {
        DesiredShape { tip_target: Some(tip_target), ..DesiredShape::STRAIGHT }
    }
}

/// Computed shape of one limb.
#[derive(Clone, Debug, PartialEq)]
pub struct LimbState {
    pub limb_id: LimbId,
    pub tendon_command: TendonCommand,
    /// Bend per joint, rad.
    pub joint_angle: f64,
    pub bend_azimuth: f64,
    pub segment_length: f64,
    /// Proximal end of each segment, limb-base frame. Segments extend along local +Z.
    pub segment_poses: Vec<Pose>,
    /// N, world frame.
    pub tip_contact_force: Vec3,
}

impl LimbState {
    pub fn total_bend(&self) -> f64 {
        self.joint_angle * self.segment_poses.len() as f64
    }

    /// Distal end of the last segment, limb-base frame.
    pub fn tip_position(&self) -> Vec3 {
        let last = self.segment_poses.last().expect("limb has segments");
        last.transform_point(Vec3::new(0.0, 0.0, self.segment_length))
    }

    /// Bend vector `(β cos φ, β sin φ)`.
    pub fn bend_vector(&self) -> [f64; 2] {
        let b = self.total_bend();
        [b * self.bend_azimuth.cos(), b * self.bend_azimuth.sin()]
    }
}

/// Builds the segment chain for a uniform per-joint bend.
pub fn chain_for_bend(config: &LimbConfig, joint_angle: f64, azimuth: f64) -> Vec<Pose> {
    let n = config.segment_count;
    let len = config.segment_length();
    let (sa, ca) = azimuth.sin_cos();
    let axis = Vec3::new(-sa, ca, 0.0);
    let mut poses = Vec::with_capacity(n);
    let mut origin = Vec3::ZERO;
    for i in 0..n {
        let angle = (i + 1) as f64 * joint_angle;
        let orientation = UnitQuat::from_axis_angle(axis, angle);
        poses.push(Pose::new(origin, orientation));
        let (s, c) = angle.sin_cos();
        origin += Vec3::new(s * ca, s * sa, c) * len;
    }
    poses
}

/// Quasi-static forward model: the tendon moment `r·(T0−T2, T1−T3)` is
/// balanced at every joint by `k·θ`.
pub fn forward_limb_model(config: &LimbConfig, cmd: &TendonCommand) -> LimbState {
    let cmd = TendonCommand::clamped(cmd.tensions, config.max_tendon_tension);
    let [dx, dy] = cmd.differential();
    let mx = config.tendon_moment_arm * dx;
    let my = config.tendon_moment_arm * dy;
    let moment = mx.hypot(my);
    let joint_angle = moment / config.joint_stiffness;
    let azimuth = if moment > 0.0 { my.atan2(mx) } else { 0.0 };
    LimbState {
        limb_id: config.limb_id,
        tendon_command: cmd,
        joint_angle,
        bend_azimuth: azimuth,
        segment_length: config.segment_length(),
        segment_poses: chain_for_bend(config, joint_angle, azimuth),
        tip_contact_force: Vec3::ZERO,
    }
}

/// Tip position of the chain for a bend vector `(β cos φ, β sin φ)`.
fn tip_for_bend_vector(config: &LimbConfig, b: [f64; 2]) -> Vec3 {
    let beta = b[0].hypot(b[1]);
    let azimuth = if beta > 0.0 { b[1].atan2(b[0]) } else { 0.0 };
    let n = config.segment_count;
    let len = config.segment_length();
    let theta = beta / n as f64;
    let (sa, ca) = azimuth.sin_cos();
    let mut tip = Vec3::ZERO;
    for i in 1..=n {
        let (s, c) = (i as f64 * theta).sin_cos();
        tip += Vec3::new(s * ca, s * sa, c) * len;
    }
    tip
}

/// Minimum-norm non-negative tensions producing the bend.
fn tensions_for_bend(config: &LimbConfig, azimuth: f64, magnitude: f64) -> TendonCommand {
    let theta = magnitude / config.segment_count as f64;
    let moment = config.joint_stiffness * theta;
    let dx = moment * azimuth.cos() / config.tendon_moment_arm;
    let dy = moment * azimuth.sin() / config.tendon_moment_arm;
    TendonCommand::clamped([dx.max(0.0), dy.max(0.0), (-dx).max(0.0), (-dy).max(0.0)], config.max_tendon_tension)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseSolution {
    pub command: TendonCommand,
    /// Set when a tip target cannot be met within tolerance.
    pub unreachable: bool,
    /// Distance from the achieved tip to the target, m (0 without a target).
    pub residual: f64,
}

/// Fraction of the limb length a tip target may miss by and still count as reached.
pub const TIP_TOLERANCE: f64 = 0.01;

/// Deterministic inverse model. Bend targets map analytically onto
/// differential tension; tip targets are solved with damped least squares
/// over the bend vector, seeded by the constant-curvature chord angle.
pub fn inverse_limb_model(config: &LimbConfig, desired: &DesiredShape) -> InverseSolution {
    let Some(target) = desired.tip_target else {
        let magnitude = desired.bend_magnitude.clamp(0.0, config.max_bend);
        return InverseSolution {
            command: tensions_for_bend(config, desired.bend_azimuth, magnitude),
            unreachable: false,
            residual: 0.0,
        };
    };

    let lateral = target.x.hypot(target.y);
    let azimuth0 = target.y.atan2(target.x);
    let beta0 = (2.0 * lateral.atan2(target.z)).clamp(0.0, config.max_bend);
    let mut b = [beta0 * azimuth0.cos(), beta0 * azimuth0.sin()];
    let project = |b: [f64; 2]| {
        let m = b[0].hypot(b[1]);
        if m > config.max_bend {
            [b[0] * config.max_bend / m, b[1] * config.max_bend / m]
        } else {
            b
        }
    };

    let scale = config.total_length;
    let mut lambda = 1e-3 * scale;
    let mut err = target - tip_for_bend_vector(config, b);
    for _ in 0..200 {
        if err.norm() < 1e-12 * scale {
            break;
        }
        let h = 1e-7;
        let col = |k: usize| {
            let (mut p, mut m) = (b, b);
            p[k] += h;
            m[k] -= h;
            (tip_for_bend_vector(config, p) - tip_for_bend_vector(config, m)) / (2.0 * h)
        };
        let (j0, j1) = (col(0), col(1));
        // (JᵀJ + λ²I) δ = Jᵀ e
        let a00 = j0.dot(j0) + lambda * lambda;
        let a01 = j0.dot(j1);
        let a11 = j1.dot(j1) + lambda * lambda;
        let g0 = j0.dot(err);
        let g1 = j1.dot(err);
        let det = a00 * a11 - a01 * a01;
        if det.abs() < 1e-300 {
            break;
        }
        let step = [(a11 * g0 - a01 * g1) / det, (a00 * g1 - a01 * g0) / det];
        let candidate = project([b[0] + step[0], b[1] + step[1]]);
        let cand_err = target - tip_for_bend_vector(config, candidate);
        if cand_err.norm() < err.norm() {
            b = candidate;
            err = cand_err;
            lambda = (lambda * 0.3).max(1e-9 * scale);
        } else {
            lambda *= 10.0;
            if lambda > 1e3 * scale {
                break;
            }
        }
    }

    let magnitude = b[0].hypot(b[1]);
    let azimuth = if magnitude > 0.0 { b[1].atan2(b[0]) } else { azimuth0 };
    let command = tensions_for_bend(config, azimuth, magnitude);
    let achieved = forward_limb_model(config, &command).tip_position();
    let residual = achieved.distance(target);
    InverseSolution { command, unreachable: residual > TIP_TOLERANCE * config.total_length, residual }
}

/// Operator stick state for one limb. Axes are nominally in `[-1, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorInput {
    pub axes: [f64; 2],
}

/// Maps stick axes to a bend: azimuth `atan2(ay, ax)`, magnitude
/// `max_bend · min(1, |a|)`, with the magnitude slewed at `max_bend_rate`.
/// A centered stick keeps the previous azimuth while the limb unbends.
pub fn proxy_map(input: &OperatorInput, config: &LimbConfig, previous: &DesiredShape, dt: f64) -> DesiredShape {
    let [mut ax, mut ay] = input.axes.map(|a| if a.is_finite() { a } else { 0.0 });
    let radius = ax.hypot(ay);
    if radius > 1.0 {
        ax /= radius;
        ay /= radius;
    }
    let target = config.max_bend * radius.min(1.0);
    let azimuth = if radius > 0.0 { ay.atan2(ax) } else { previous.bend_azimuth };
    let max_step = config.max_bend_rate * dt;
    let delta = (target - previous.bend_magnitude).clamp(-max_step, max_step);
    DesiredShape { bend_azimuth: azimuth, bend_magnitude: previous.bend_magnitude + delta, tip_target: None }
}

/// Stateful wrapper around [`proxy_map`] for one limb.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProxyMapper {
    pub current: DesiredShape,
}

impl ProxyMapper {
    pub fn map(&mut self, input: &OperatorInput, config: &LimbConfig, dt: f64) -> DesiredShape {
        self.current = proxy_map(input, config, &self.current, dt);
        self.current
    }
}

/// World pose of every segment's proximal end: `head ∘ base ∘ segment`.
pub fn world_segment_poses(state: &LimbState, config: &LimbConfig, head: &Pose) -> Vec<Pose> {
    let base = compose_unchecked(head, &config.base_pose);
    state.segment_poses.iter().map(|p| compose_unchecked(&base, p)).collect()
}

/// Segment poses for publication, one per segment, expressed in `frame`.
pub fn discretize_limb(
    state: &LimbState,
    config: &LimbConfig,
    head: &Pose,
    frame: FrameConvention,
) -> Result<Vec<TaggedPose>, FrameError> {
    world_segment_poses(state, config, head).iter().map(|p| express(p, frame)).collect()
}

/// Sum of estimated contact forces acting on the distal segment.
pub fn tip_contact_force(distal_segment: BodyId, events: &[ContactEvent]) -> Vec3 {
    events.iter().fold(Vec3::ZERO, |acc, e| acc + e.force_on(distal_segment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ContactPhase;
    use proptest::prelude::*;

    fn cfg() -> LimbConfig {
        LimbConfig::default()
    }

    fn assert_straight(state: &LimbState, config: &LimbConfig) {
        let len = config.segment_length();
        for (i, p) in state.segment_poses.iter().enumerate() {
            assert_eq!(p.position, Vec3::new(0.0, 0.0, i as f64 * len));
            assert_eq!(p.orientation, UnitQuat::IDENTITY);
        }
    }

    #[test]
    fn zero_tension_is_straight() {
        let c = cfg();
        let s = forward_limb_model(&c, &TendonCommand::default());
        assert_eq!(s.joint_angle, 0.0);
        assert_straight(&s, &c);
    }

    #[test]
    fn equal_tension_is_straight() {
        let c = cfg();
        let s = forward_limb_model(&c, &TendonCommand { tensions: [7.5; 4] });
        assert_eq!(s.joint_angle, 0.0);
        assert_straight(&s, &c);
    }

    #[test]
    fn single_tendon_closed_form_arc() {
        let c = LimbConfig { joint_stiffness: 0.05, tendon_moment_arm: 0.015, ..cfg() };
        let s = forward_limb_model(&c, &TendonCommand { tensions: [2.0, 0.0, 0.0, 0.0] });
        assert!((s.joint_angle - 0.6).abs() < 1e-12);
        assert_eq!(s.bend_azimuth, 0.0);
        // regular-polygon closed form for the chain vertices
        let (n, len, th) = (12.0f64, 0.05f64, 0.6f64);
        let common = (n * th / 2.0).sin() / (th / 2.0).sin() * len;
        let x = common * ((n + 1.0) * th / 2.0).sin();
        let z = common * ((n + 1.0) * th / 2.0).cos();
        let tip = s.tip_position();
        assert!((tip - Vec3::new(x, 0.0, z)).norm() < 1e-9, "{tip}");
    }

    #[test]
    fn chain_closure_holds() {
        let c = cfg();
        let s = forward_limb_model(&c, &TendonCommand { tensions: [3.0, 11.0, 0.5, 0.0] });
        let mut pts: Vec<Vec3> = s.segment_poses.iter().map(|p| p.position).collect();
        pts.push(s.tip_position());
        for w in pts.windows(2) {
            assert!((w[0].distance(w[1]) - c.segment_length()).abs() < 1e-15);
        }
        assert_eq!(s.segment_poses[0].position, Vec3::ZERO);
    }

    #[test]
    fn straight_request_needs_no_differential() {
        let sol = inverse_limb_model(&cfg(), &DesiredShape::STRAIGHT);
        assert_eq!(sol.command.differential(), [0.0, 0.0]);
        assert!(!sol.unreachable);
    }

    #[test]
    fn inverse_recovers_single_tendon_differential() {
        let c = cfg();
        let fwd = forward_limb_model(&c, &TendonCommand { tensions: [2.0, 0.0, 0.0, 0.0] });
        let desired = DesiredShape::bend(fwd.bend_azimuth, fwd.total_bend());
        let sol = inverse_limb_model(&c, &desired);
        let [dx, dy] = sol.command.differential();
        assert!((dx - 2.0).abs() < 0.02);
        assert!(dy.abs() < 0.02);
    }

    #[test]
    fn inverse_reaches_tip_of_forward_shape() {
        let c = cfg();
        let fwd = forward_limb_model(&c, &TendonCommand { tensions: [0.0, 9.0, 0.0, 2.0] });
        let sol = inverse_limb_model(&c, &DesiredShape::toward(fwd.tip_position()));
        assert!(!sol.unreachable);
        let back = forward_limb_model(&c, &sol.command);
        assert!(back.tip_position().distance(fwd.tip_position()) < 1e-6);
    }

    #[test]
    fn far_target_is_unreachable_best_effort() {
        let c = cfg();
        let dir = Vec3::new(0.3, 0.2, 1.0).normalize();
        let target = dir * (2.0 * c.total_length);
        let sol = inverse_limb_model(&c, &DesiredShape::toward(target));
        assert!(sol.unreachable);
        assert!(sol.residual > 0.5 * c.total_length);
        let tip = forward_limb_model(&c, &sol.command).tip_position();
        // best effort leans the tip toward the target
        assert!(tip.normalize().dot(dir) > 0.99);
    }

    #[test]
    fn proxy_zero_input_stays_home() {
        let c = cfg();
        let s = proxy_map(&OperatorInput::default(), &c, &DesiredShape::STRAIGHT, 0.02);
        assert_eq!(s.bend_magnitude, 0.0);
    }

    #[test]
    fn proxy_ramps_at_slew_rate() {
        let c = cfg();
        let dt = 0.02;
        let mut m = ProxyMapper::default();
        for k in 1..=150 {
            let s = m.map(&OperatorInput { axes: [1.0, 0.0] }, &c, dt);
            let expected = (c.max_bend_rate * k as f64 * dt).min(c.max_bend);
            assert!((s.bend_magnitude - expected).abs() < 1e-12, "step {k}");
            assert_eq!(s.bend_azimuth, 0.0);
        }
    }

    #[test]
    fn proxy_clamps_to_unit_disc() {
        let c = LimbConfig { max_bend_rate: 1e9, ..cfg() };
        let s = proxy_map(&OperatorInput { axes: [3.0, 4.0] }, &c, &DesiredShape::STRAIGHT, 0.02);
        assert!((s.bend_magnitude - c.max_bend).abs() < 1e-12);
        assert!((s.bend_azimuth - 4f64.atan2(3.0)).abs() < 1e-15);
    }

    #[test]
    fn proxy_keeps_azimuth_when_released() {
        let c = cfg();
        let prev = DesiredShape::bend(1.0, 0.5);
        let s = proxy_map(&OperatorInput::default(), &c, &prev, 0.02);
        assert_eq!(s.bend_azimuth, 1.0);
        assert!(s.bend_magnitude < 0.5);
    }

    #[test]
    fn discretize_straight_limb_is_collinear() {
        let c = cfg();
        let s = forward_limb_model(&c, &TendonCommand::default());
        let poses = discretize_limb(&s, &c, &Pose::IDENTITY, FrameConvention::Sim).unwrap();
        assert_eq!(poses.len(), c.segment_count);
        for (i, p) in poses.iter().enumerate() {
            assert_eq!(p.frame, FrameConvention::Sim);
            assert!((p.pose.position - Vec3::new(0.0, 0.0, i as f64 * 0.05)).norm() < 1e-15);
        }
    }

    #[test]
    fn quarter_circle_chord_error_matches_sagitta() {
        let c = cfg();
        let beta = PI / 2.0;
        let s = forward_limb_model(&c, &inverse_limb_model(&c, &DesiredShape::bend(0.3, beta)).command);
        let n = c.segment_count as f64;
        let len = c.segment_length();
        let theta = s.joint_angle;
        assert!((theta * n - beta).abs() < 1e-12);
        // vertices lie on the circumscribed circle of the regular polygon
        let radius = len / (2.0 * (theta / 2.0).sin());
        let azim = Vec3::new(0.3f64.cos(), 0.3f64.sin(), 0.0);
        // first segment leaves the base already bent by theta, so the tangent at the base is at theta/2
        let center = (azim * (theta / 2.0).cos() - Vec3::Z * (theta / 2.0).sin()) * radius;
        let mut pts: Vec<Vec3> = s.segment_poses.iter().map(|p| p.position).collect();
        pts.push(s.tip_position());
        for p in &pts {
            assert!((p.distance(center) - radius).abs() < 1e-12);
        }
        let mut worst: f64 = 0.0;
        for w in pts.windows(2) {
            for k in 0..=100 {
                let q = w[0].lerp(w[1], k as f64 / 100.0);
                worst = worst.max(radius - q.distance(center));
            }
        }
        let kappa = beta / c.total_length;
        let bound = c.total_length.powi(2) * kappa / (8.0 * n * n);
        assert!(((worst - bound) / bound).abs() < 2e-3, "worst {worst} bound {bound}");
        assert!(worst < 2e-3);
    }

    #[test]
    fn tip_force_sums_distal_contacts_only() {
        let tip = BodyId(11);
        let other = BodyId(5);
        let obj = BodyId(40);
        let ev = |a, b, f| ContactEvent {
            phase: ContactPhase::Stay,
            body_a: a,
            body_b: b,
            point: Vec3::ZERO,
            normal: Vec3::X,
            penetration: 0.0,
            impulse: f * 0.02,
            estimated_force: f,
        };
        assert_eq!(tip_contact_force(tip, &[]), Vec3::ZERO);
        let events = [ev(tip, obj, 3.0), ev(other, obj, 100.0)];
        // tip is body_a: object pushes back along -normal
        assert_eq!(tip_contact_force(tip, &events), Vec3::new(-3.0, 0.0, 0.0));
    }

    fn arb_tensions() -> impl Strategy<Value = [f64; 4]> {
        prop::array::uniform4(0.0..20.0f64)
    }

    proptest! {
        #[test]
        fn mirroring_tendons_mirrors_shape(t in arb_tensions()) {
            let c = cfg();
            let a = forward_limb_model(&c, &TendonCommand { tensions: t });
            let b = forward_limb_model(&c, &TendonCommand { tensions: [t[2], t[1], t[0], t[3]] });
            for (p, q) in a.segment_poses.iter().zip(&b.segment_poses) {
                prop_assert!((p.position.x + q.position.x).abs() < 1e-12);
                prop_assert!((p.position.y - q.position.y).abs() < 1e-12);
                prop_assert!((p.position.z - q.position.z).abs() < 1e-12);
            }
        }

        #[test]
        fn more_tension_never_reduces_bend_in_its_plane(t in arb_tensions(), extra in 0.0..5.0f64, k in 0usize..4) {
            let c = cfg();
            let dirs = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
            let before = forward_limb_model(&c, &TendonCommand { tensions: t }).bend_vector();
            let mut t2 = t;
            t2[k] += extra;
            let after = forward_limb_model(&c, &TendonCommand { tensions: t2 }).bend_vector();
            let d = dirs[k];
            prop_assert!(after[0] * d[0] + after[1] * d[1] >= before[0] * d[0] + before[1] * d[1] - 1e-12);
        }

        #[test]
        fn co_tension_leaves_shape_unchanged(t in arb_tensions(), co in 0.0..5.0f64) {
            let c = LimbConfig { max_tendon_tension: 100.0, ..cfg() };
            let a = forward_limb_model(&c, &TendonCommand { tensions: t });
            let b = forward_limb_model(&c, &TendonCommand { tensions: t.map(|x| x + co) });
            prop_assert!((a.tip_position() - b.tip_position()).norm() < 1e-12);
        }
    }
}
