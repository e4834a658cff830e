//! The robot assembled into a physics world.
//!
//! The vehicle is a dynamic rigid body driven by ramped propulsion. Each
//! limb is a chain of kinematic capsules whose poses are imposed after every
//! world step from the quasi-static limb shape, so limbs push objects
//! without being pushed back.

use sha2::{Digest, Sha256};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, PhysicsError};
use crate::frames::{compose_unchecked, Pose, UnitQuat, Vec3};
use crate::limb::{
    chain_for_bend, forward_limb_model, inverse_limb_model, world_segment_poses, LimbConfig, LimbId, LimbState,
    OperatorInput, ProxyMapper, LIMB_COUNT,
};
use crate::physics::world::hex_digest;
use crate::physics::{
    Body, BodyId, ColliderShape, ContactEvent, ContactPhase, HydroParams, Material, RigidBodyState, Wrench, World,
    SEAWATER_DENSITY,
};
use crate::vehicle::{PropulsionCommand, RampParams, VehicleState};

/// Collision group shared by the vehicle and its limbs.
pub const ROBOT_GROUP: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleConfig {
    /// kg
    pub mass: f64,
    pub collider: ColliderShape,
    pub hydro: HydroParams,
    pub material: Material,
    pub ramp: RampParams,
}

pub const VEHICLE_MASS: f64 = 30.0;

impl Default for VehicleConfig {
    fn default() -> Self {
        // placeholder coefficients for a ~0.7 m, 30 kg hull
        VehicleConfig {
            mass: VEHICLE_MASS,
            collider: ColliderShape::Box { half_extents: Vec3::new(0.35, 0.1, 0.1) },
            hydro: HydroParams {
                fluid_density: SEAWATER_DENSITY,
                displaced_volume: VEHICLE_MASS / SEAWATER_DENSITY * 1.002,
                center_of_buoyancy_offset: Vec3::new(0.0, 0.0, 0.02),
                added_mass_diag: Vec3::new(3.0, 12.0, 12.0),
                linear_drag_diag: Vec3::new(8.0, 16.0, 16.0),
                quadratic_drag_diag: Vec3::new(25.0, 50.0, 50.0),
                angular_drag_diag: Vec3::new(3.0, 3.0, 3.0),
            },
            material: Material::default(),
            ramp: RampParams::default(),
        }
    }
}

impl VehicleConfig {
    /// Sets the displaced volume so buoyancy exactly cancels weight.
    pub fn neutrally_buoyant(mut self) -> Self {
        self.hydro.displaced_volume = self.mass / self.hydro.fluid_density;
        self
    }
}

/// Limb base frame: local X → body +Y, local Y → body +Z, local Z (growth) → body +X.
pub const LIMB_BASE_ORIENTATION: UnitQuat = UnitQuat { w: 0.5, x: 0.5, y: 0.5, z: 0.5 };

/// The four limbs on the head front: arms left/right, tentacles above/below.
pub fn default_limbs() -> Vec<LimbConfig> {
    let front = 0.35;
    let at = |p: Vec3| Pose::new(p, LIMB_BASE_ORIENTATION);
    vec![
        LimbConfig::for_limb(LimbId::Arm1, at(Vec3::new(front, 0.06, 0.0))),
        LimbConfig::for_limb(LimbId::Arm2, at(Vec3::new(front, -0.06, 0.0))),
        LimbConfig::for_limb(LimbId::TentacleCam, at(Vec3::new(front, 0.0, 0.06))),
        LimbConfig::for_limb(LimbId::TentacleLight, at(Vec3::new(front, 0.0, -0.06))),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub name: String,
    /// Initial vehicle pose, world frame.
    pub pose: Pose,
    pub vehicle: VehicleConfig,
    pub limbs: Vec<LimbConfig>,
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig {
            name: "ursula".into(),
            pose: Pose::from_position(Vec3::new(0.0, 0.0, 1.0)),
            vehicle: VehicleConfig::default(),
            limbs: default_limbs(),
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let entry = |what: &str| format!("robot.{what}");
        if self.limbs.len() != LIMB_COUNT {
            return Err(ConfigError::invalid(entry("limbs"), format!("expected {LIMB_COUNT} limbs, got {}", self.limbs.len())));
        }
        for (i, l) in self.limbs.iter().enumerate() {
            if l.limb_id.index() != i {
                return Err(ConfigError::invalid(
                    format!("robot.limbs[{i}]"),
                    format!("limb_id {:?} must appear at index {}", l.limb_id, l.limb_id.index()),
                ));
            }
            l.validate().map_err(|d| ConfigError::invalid(format!("robot.limbs[{i}]"), d))?;
        }
        self.vehicle.ramp.validate().map_err(|d| ConfigError::invalid(entry("vehicle.ramp"), d))?;
        self.pose.validate().map_err(|e| ConfigError::invalid(entry("pose"), e.to_string()))
    }

    pub fn vehicle_name(&self) -> String {
        format!("{}/vehicle", self.name)
    }

    pub fn segment_name(&self, limb: usize, segment: usize) -> String {
        format!("{}/limb{limb}/seg{segment:02}", self.name)
    }
}

/// One operator command, routed to a limb or the vehicle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Command {
    Limb { limb: usize, axes: [f64; 2], grip: Option<bool> },
    Vehicle(PropulsionCommand),
}

/// Contact event with body names resolved, for publication and logs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub phase: ContactPhase,
    pub body_a: String,
    pub body_b: String,
    pub point: Vec3,
    pub normal: Vec3,
    pub penetration: f64,
    pub impulse: f64,
    pub force: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BodyKinematics {
    pub pose: Pose,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

/// Read-only copy of everything the bridge publishes, in the sim frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub time: f64,
    pub vehicle: BodyKinematics,
    /// Proximal-end pose of every segment, world frame.
    pub segments: Vec<Vec<Pose>>,
    pub segment_length: Vec<f64>,
    pub segment_radius: Vec<f64>,
    pub tip_forces: Vec<Vec3>,
    pub contacts: Vec<ContactRecord>,
}

pub struct Simulation {
    world: World,
    robot: RobotConfig,
    vehicle_id: BodyId,
    segment_ids: Vec<Vec<BodyId>>,
    limbs: Vec<LimbState>,
    proxies: Vec<ProxyMapper>,
    inputs: Vec<OperatorInput>,
    /// Per-limb bend vector actually realized (differs from the target only with joint damping).
    bends: Vec<[f64; 2]>,
    vehicle: VehicleState,
    grip: bool,
    last_events: Vec<ContactEvent>,
}

impl Simulation {
    /// Adds the robot to `world`, which may already hold scene bodies.
    pub fn new(mut world: World, robot: RobotConfig) -> Result<Self, ConfigError> {
        robot.validate()?;
        let v = &robot.vehicle;
        let state = RigidBodyState::dynamic(robot.pose, v.mass, v.collider.solid_inertia(v.mass));
        let vehicle_body = Body::new(robot.vehicle_name(), state)
            .with_collider(v.collider.clone())
            .with_hydro(v.hydro.clone())
            .with_material(v.material)
            .with_group(ROBOT_GROUP);
        let vehicle_id = world.add_body(vehicle_body)?;

        let mut segment_ids = Vec::with_capacity(LIMB_COUNT);
        let mut limbs = Vec::with_capacity(LIMB_COUNT);
        for (i, cfg) in robot.limbs.iter().enumerate() {
            let shape = forward_limb_model(cfg, &Default::default());
            let poses = segment_body_poses(&shape, cfg, &robot.pose);
            let collider = segment_collider(cfg);
            let mut ids = Vec::with_capacity(poses.len());
            for (j, pose) in poses.into_iter().enumerate() {
                let body = Body::new(robot.segment_name(i, j), RigidBodyState::kinematic(pose))
                    .with_collider(collider.clone())
                    .with_group(ROBOT_GROUP);
                ids.push(world.add_body(body)?);
            }
            segment_ids.push(ids);
            limbs.push(shape);
        }

        Ok(Simulation {
            world,
            vehicle_id,
            segment_ids,
            limbs,
            proxies: vec![ProxyMapper::default(); LIMB_COUNT],
            inputs: vec![OperatorInput::default(); LIMB_COUNT],
            bends: vec![[0.0; 2]; LIMB_COUNT],
            vehicle: VehicleState::default(),
            grip: false,
            last_events: Vec::new(),
            robot,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn robot(&self) -> &RobotConfig {
        &self.robot
    }

    pub fn dt(&self) -> f64 {
        self.world.dt()
    }

    pub fn time(&self) -> f64 {
        self.world.time()
    }

    pub fn step_index(&self) -> u64 {
        self.world.step_index()
    }

    pub fn vehicle_id(&self) -> BodyId {
        self.vehicle_id
    }

    pub fn segment_ids(&self, limb: usize) -> &[BodyId] {
        &self.segment_ids[limb]
    }

    pub fn is_robot_body(&self, id: BodyId) -> bool {
        id == self.vehicle_id || self.segment_ids.iter().any(|s| s.contains(&id))
    }

    /// Limb index owning a segment body.
    pub fn limb_of(&self, id: BodyId) -> Option<usize> {
        self.segment_ids.iter().position(|s| s.contains(&id))
    }

    pub fn limb_state(&self, limb: usize) -> &LimbState {
        &self.limbs[limb]
    }

    pub fn limb_config(&self, limb: usize) -> &LimbConfig {
        &self.robot.limbs[limb]
    }

    pub fn vehicle_pose(&self) -> Pose {
        self.world.body(self.vehicle_id).state.pose
    }

    pub fn vehicle_state(&self) -> &VehicleState {
        &self.vehicle
    }

    pub fn grip_commanded(&self) -> bool {
        self.grip
    }

    /// Tip pose of a limb in the world frame (orientation of the distal segment).
    pub fn tip_pose(&self, limb: usize) -> Pose {
        let state = &self.limbs[limb];
        let base = compose_unchecked(&self.vehicle_pose(), &self.robot.limbs[limb].base_pose);
        let last = state.segment_poses.last().expect("limb has segments");
        let tip_local = Pose::new(state.tip_position(), last.orientation);
        compose_unchecked(&base, &tip_local)
    }

    pub fn tip_position(&self, limb: usize) -> Vec3 {
        self.tip_pose(limb).position
    }

    /// Contact events produced by the most recent step.
    pub fn last_events(&self) -> &[ContactEvent] {
        &self.last_events
    }

    /// Applies a command; it stays in force until replaced.
    pub fn apply(&mut self, cmd: &Command) {
        match *cmd {
            Command::Limb { limb, axes, grip } => {
                if let Some(input) = self.inputs.get_mut(limb) {
                    input.axes = axes;
                }
                if let Some(g) = grip {
                    self.grip = g;
                }
            }
            Command::Vehicle(c) => self.vehicle.raw_command = c.clamped(),
        }
    }

    /// One fixed step: limb shapes from operator input, propulsion, physics,
    /// then limb segments re-imposed on the moved vehicle.
    pub fn step(&mut self, extra: &[(BodyId, Wrench)]) -> Result<&[ContactEvent], PhysicsError> {
        let dt = self.world.dt();
        let mut shapes = Vec::with_capacity(LIMB_COUNT);
        let mut bends = self.bends.clone();
        let mut proxies = self.proxies.clone();
        for i in 0..LIMB_COUNT {
            let cfg = &self.robot.limbs[i];
            let desired = proxies[i].map(&self.inputs[i], cfg, dt);
            let cmd = inverse_limb_model(cfg, &desired).command;
            let target = forward_limb_model(cfg, &cmd);
            let shape = if cfg.joint_damping > 0.0 {
                let goal = target.bend_vector();
                let alpha = -(-dt * cfg.joint_stiffness / cfg.joint_damping).exp_m1();
                let b = &mut bends[i];
                b[0] += (goal[0] - b[0]) * alpha;
                b[1] += (goal[1] - b[1]) * alpha;
                let magnitude = b[0].hypot(b[1]);
                let azimuth = if magnitude > 0.0 { b[1].atan2(b[0]) } else { 0.0 };
                let theta = magnitude / cfg.segment_count as f64;
                LimbState { joint_angle: theta, bend_azimuth: azimuth, segment_poses: chain_for_bend(cfg, theta, azimuth), ..target }
            } else {
                bends[i] = target.bend_vector();
                target
            };
            shapes.push(shape);
        }

        let mut vehicle = self.vehicle;
        let propulsion = vehicle.apply_propulsion(&self.robot.vehicle.ramp, &self.vehicle_pose(), dt);
        let mut wrenches = Vec::with_capacity(extra.len() + 1);
        wrenches.push((self.vehicle_id, propulsion));
        wrenches.extend_from_slice(extra);
        let report = self.world.step(&wrenches)?;

        self.vehicle = vehicle;
        self.proxies = proxies;
        self.bends = bends;
        let head = self.vehicle_pose();
        for (i, mut shape) in shapes.into_iter().enumerate() {
            let cfg = &self.robot.limbs[i];
            for (id, pose) in self.segment_ids[i].iter().zip(segment_body_poses(&shape, cfg, &head)) {
                self.world.set_kinematic_pose(*id, pose);
            }
            let distal = *self.segment_ids[i].last().expect("limb has segments");
            shape.tip_contact_force = crate::limb::tip_contact_force(distal, &report.events);
            self.limbs[i] = shape;
        }
        self.last_events = report.events;
        Ok(&self.last_events)
    }

    /// Ends all open contacts; returns their Exit events.
    pub fn close_contacts(&mut self) -> Vec<ContactEvent> {
        self.world.close_contacts()
    }

    /// Hash of the world plus the controller-side state that shapes future steps.
    pub fn state_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.world.state_hash().as_bytes());
        for p in &self.proxies {
            h.update(p.current.bend_azimuth.to_bits().to_le_bytes());
            h.update(p.current.bend_magnitude.to_bits().to_le_bytes());
        }
        for b in &self.bends {
            h.update(b[0].to_bits().to_le_bytes());
            h.update(b[1].to_bits().to_le_bytes());
        }
        for c in self.vehicle.ramped_command.as_array().into_iter().chain(self.vehicle.raw_command.as_array()) {
            h.update(c.to_bits().to_le_bytes());
        }
        for i in &self.inputs {
            h.update(i.axes[0].to_bits().to_le_bytes());
            h.update(i.axes[1].to_bits().to_le_bytes());
        }
        h.update([self.grip as u8]);
        hex_digest(h)
    }

    pub fn contact_records(&self, events: &[ContactEvent]) -> Vec<ContactRecord> {
        events
            .iter()
            .map(|e| ContactRecord {
                phase: e.phase,
                body_a: self.world.name(e.body_a).to_owned(),
                body_b: self.world.name(e.body_b).to_owned(),
                point: e.point,
                normal: e.normal,
                penetration: e.penetration,
                impulse: e.impulse,
                force: e.estimated_force,
            })
            .collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        let v = &self.world.body(self.vehicle_id).state;
        let head = v.pose;
        Snapshot {
            step: self.world.step_index(),
            time: self.world.time(),
            vehicle: BodyKinematics { pose: v.pose, linear_velocity: v.linear_velocity, angular_velocity: v.angular_velocity },
            segments: (0..LIMB_COUNT)
                .map(|i| world_segment_poses(&self.limbs[i], &self.robot.limbs[i], &head))
                .collect(),
            segment_length: self.robot.limbs.iter().map(LimbConfig::segment_length).collect(),
            segment_radius: self.robot.limbs.iter().map(|l| l.segment_radius).collect(),
            tip_forces: self.limbs.iter().map(|l| l.tip_contact_force).collect(),
            contacts: self.contact_records(&self.last_events),
        }
    }
}

fn segment_collider(cfg: &LimbConfig) -> ColliderShape {
    let half = cfg.segment_length() / 2.0;
    ColliderShape::Capsule { half_length: (half - cfg.segment_radius).max(0.0), radius: cfg.segment_radius }
}

/// Capsule-center pose of every segment body.
fn segment_body_poses(shape: &LimbState, cfg: &LimbConfig, head: &Pose) -> Vec<Pose> {
    let center = Pose::from_position(Vec3::new(0.0, 0.0, cfg.segment_length() / 2.0));
    world_segment_poses(shape, cfg, head).iter().map(|p| compose_unchecked(p, &center)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim() -> Simulation {
        let robot = RobotConfig { vehicle: VehicleConfig::default().neutrally_buoyant(), ..Default::default() };
        Simulation::new(World::new(0.02), robot).unwrap()
    }

    #[test]
    fn builds_vehicle_and_segments() {
        let s = sim();
        assert_eq!(s.world().bodies().len(), 1 + 4 * 12);
        assert_eq!(s.world().name(s.vehicle_id()), "ursula/vehicle");
        assert_eq!(s.world().name(s.segment_ids(3)[11]), "ursula/limb3/seg11");
    }

    #[test]
    fn straight_limb_points_forward() {
        let s = sim();
        let tip = s.tip_position(0);
        assert!((tip - Vec3::new(0.35 + 0.6, 0.06, 1.0)).norm() < 1e-12, "{tip}");
    }

    #[test]
    fn idle_robot_holds_still() {
        let mut s = sim();
        for _ in 0..200 {
            s.step(&[]).unwrap();
        }
        assert!((s.vehicle_pose().position - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn limb_command_bends_toward_port() {
        let mut s = sim();
        s.apply(&Command::Limb { limb: 0, axes: [1.0, 0.0], grip: None });
        for _ in 0..100 {
            s.step(&[]).unwrap();
        }
        assert!((s.limb_state(0).total_bend() - std::f64::consts::PI).abs() < 1e-9);
        // bent toward +Y of the body and curled back
        let tip = s.tip_position(0);
        assert!(tip.y > 0.2 && tip.x < 0.35 + 0.3, "{tip}");
    }

    #[test]
    fn surge_moves_forward() {
        let mut s = sim();
        s.apply(&Command::Vehicle(PropulsionCommand::new(1.0, 0.0, 0.0, 0.0)));
        for _ in 0..100 {
            s.step(&[]).unwrap();
        }
        let p = s.vehicle_pose().position;
        assert!(p.x > 0.5 && p.y.abs() < 1e-9, "{p}");
        // segments ride along with the vehicle
        let seg = s.world().body(s.segment_ids(0)[0]).state.pose.position;
        assert!((seg - (p + Vec3::new(0.35 + 0.025, 0.06, 0.0))).norm() < 1e-3, "{seg}");
    }

    #[test]
    fn damped_joints_lag_the_command() {
        let mut robot = RobotConfig { vehicle: VehicleConfig::default().neutrally_buoyant(), ..Default::default() };
        robot.limbs[0].joint_damping = 2.0;
        let mut s = Simulation::new(World::new(0.02), robot).unwrap();
        let mut plain = sim();
        for sim in [&mut s, &mut plain] {
            sim.apply(&Command::Limb { limb: 0, axes: [0.0, 1.0], grip: None });
            for _ in 0..20 {
                sim.step(&[]).unwrap();
            }
        }
        assert!(s.limb_state(0).total_bend() < plain.limb_state(0).total_bend());
        assert!(s.limb_state(0).total_bend() > 0.0);
    }

    #[test]
    fn hash_tracks_controller_state() {
        let mut a = sim();
        let b = sim();
        assert_eq!(a.state_hash(), b.state_hash());
        a.apply(&Command::Vehicle(PropulsionCommand::new(0.5, 0.0, 0.0, 0.0)));
        assert_ne!(a.state_hash(), b.state_hash());
    }

    #[test]
    fn rejects_wrong_limb_count() {
        let robot = RobotConfig { limbs: default_limbs()[..3].to_vec(), ..Default::default() };
        let err = Simulation::new(World::new(0.02), robot).err().unwrap();
        assert!(err.to_string().contains("robot.limbs"));
    }
}
