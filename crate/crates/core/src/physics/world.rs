use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::PhysicsError;
use crate::frames::{Pose, UnitQuat, Vec3};
use crate::physics::body::{Body, BodyId};
use crate::physics::contact::{
    ContactConstraint, ContactEvent, ContactTracker, PairKey, ResolvedContact, SolverBody, SolverParams,
};
use crate::physics::hydro::{
    apply_added_mass, buoyancy_force, drag_force, inverse_effective_mass, CurrentField, Wrench,
};
use crate::physics::shapes::{collide, ColliderShape};
use crate::physics::body::Material;

pub const DEFAULT_DT: f64 = 0.02;
pub const DEFAULT_GRAVITY: Vec3 = Vec3::new(0.0, 0.0, -9.81);

/// Output of one fixed step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub events: Vec<ContactEvent>,
}

/// Fixed-timestep rigid-body world in the simulation frame.
#[derive(Clone, Debug)]
pub struct World {
    bodies: Vec<Body>,
    names: BTreeMap<String, BodyId>,
    pub gravity: Vec3,
    pub current: CurrentField,
    pub solver: SolverParams,
    dt: f64,
    step_index: u64,
    tracker: ContactTracker,
}

impl World {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0 && dt.is_finite(), "dt must be positive");
        World {
            bodies: Vec::new(),
            names: BTreeMap::new(),
            gravity: DEFAULT_GRAVITY,
            current: CurrentField::still(),
            solver: SolverParams::default(),
            dt,
            step_index: 0,
            tracker: ContactTracker::default(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    pub fn add_body(&mut self, body: Body) -> Result<BodyId, PhysicsError> {
        if self.names.contains_key(&body.name) {
            return Err(PhysicsError::DuplicateBody(body.name));
        }
        body.validate()
            .map_err(|detail| PhysicsError::InvalidParameter { body: body.name.clone(), detail })?;
        let id = BodyId(self.bodies.len() as u32);
        self.names.insert(body.name.clone(), id);
        self.bodies.push(body);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<BodyId> {
        self.names.get(name).copied()
    }

    pub fn body(&self, id: BodyId) -> &Body {
        &self.bodies[id.index()]
    }

    pub fn body_mut(&mut self, id: BodyId) -> &mut Body {
        &mut self.bodies[id.index()]
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn ids(&self) -> impl Iterator<Item = BodyId> {
        (0..self.bodies.len() as u32).map(BodyId)
    }

    pub fn name(&self, id: BodyId) -> &str {
        &self.bodies[id.index()].name
    }

    pub fn contact_tracker(&self) -> &ContactTracker {
        &self.tracker
    }

    /// Places a kinematic body and records the implied velocity so the
    /// solver sees its motion on the next step.
    pub fn set_kinematic_pose(&mut self, id: BodyId, pose: Pose) {
        let dt = self.dt;
        let s = &mut self.bodies[id.index()].state;
        debug_assert!(s.kinematic);
        s.linear_velocity = (pose.position - s.pose.position) / dt;
        let delta = pose.orientation.mul_quat(&s.pose.orientation.conjugate());
        s.angular_velocity = delta.to_rotation_vector() / dt;
        s.pose = pose;
    }

    /// Switches a body between scripted and dynamic. A body leaving the
    /// kinematic state keeps its current velocity and drops its trajectory.
    /// A body without positive mass and inertia stays kinematic.
    pub fn set_kinematic(&mut self, id: BodyId, kinematic: bool) {
        let b = &mut self.bodies[id.index()];
        let inertia = b.state.inertia_diag;
        if !kinematic && !(b.state.mass > 0.0 && inertia.x > 0.0 && inertia.y > 0.0 && inertia.z > 0.0) {
            log::warn!("`{}` has no mass properties; keeping it kinematic", b.name);
            return;
        }
        b.state.kinematic = kinematic;
        if !kinematic {
            b.trajectory = None;
        }
    }

    fn should_test(&self, a: &Body, b: &Body) -> bool {
        let (Some(ca), Some(cb)) = (&a.collider, &b.collider) else { return false };
        if matches!(ca, ColliderShape::HalfSpace { .. }) && matches!(cb, ColliderShape::HalfSpace { .. }) {
            return false;
        }
        if a.group.is_some() && a.group == b.group {
            return false;
        }
        let reach = ca.bounding_radius() + cb.bounding_radius();
        reach.is_infinite() || a.state.pose.position.distance(b.state.pose.position) <= reach
    }

    /// All touching pairs at the current poses, lower id first.
    pub fn detect_contacts(&self) -> Result<Vec<(PairKey, crate::physics::shapes::ContactGeometry)>, PhysicsError> {
        detect_contacts(&self.bodies, |a, b| self.should_test(a, b))
    }

    /// Advances one fixed step. `wrenches` are extra world-frame loads
    /// (propulsion etc.) applied for this step only.
    pub fn step(&mut self, wrenches: &[(BodyId, Wrench)]) -> Result<StepReport, PhysicsError> {
        let dt = self.dt;
        let t = self.time();
        let t_next = (self.step_index + 1) as f64 * dt;
        let mut bodies = self.bodies.clone();

        let mut external: Vec<Wrench> = vec![Wrench::ZERO; bodies.len()];
        for (id, w) in wrenches {
            let slot = external
                .get_mut(id.index())
                .ok_or_else(|| PhysicsError::UnknownBody(format!("#{}", id.0)))?;
            *slot += *w;
        }

        // scripted bodies: velocity from the path so contacts see it
        let mut targets: Vec<Option<Vec3>> = vec![None; bodies.len()];
        for (i, b) in bodies.iter_mut().enumerate() {
            if let (true, Some(traj)) = (b.state.kinematic, &b.trajectory) {
                let target = traj.position_at(t_next);
                b.state.linear_velocity = (target - b.state.pose.position) / dt;
                b.state.angular_velocity = Vec3::ZERO;
                targets[i] = Some(target);
            }
        }

        let before: Vec<(Vec3, Vec3)> = bodies.iter().map(|b| (b.state.linear_velocity, b.state.angular_velocity)).collect();

        // forces -> velocities
        let current = self.current.velocity_at(t);
        for (i, b) in bodies.iter_mut().enumerate() {
            if b.state.kinematic {
                continue;
            }
            let mut w = Wrench::new(self.gravity * b.state.mass, Vec3::ZERO);
            if let Some(h) = &b.hydro {
                w += buoyancy_force(&b.state, h, self.gravity);
                w += drag_force(&b.state, h, current);
            }
            w += external[i];
            let accel = apply_added_mass(&b.state, b.hydro.as_ref(), w.force);
            b.state.linear_velocity += accel * dt;

            let q = b.state.pose.orientation;
            let inertia = b.state.inertia_diag;
            let wb = q.conjugate().rotate(b.state.angular_velocity);
            let tb = q.conjugate().rotate(w.torque);
            let gyro = wb.cross(inertia.hadamard(wb));
            let alpha = Vec3::new((tb.x - gyro.x) / inertia.x, (tb.y - gyro.y) / inertia.y, (tb.z - gyro.z) / inertia.z);
            b.state.angular_velocity += q.rotate(alpha) * dt;
        }

        // contacts
        let filter = |a: &Body, b: &Body| self.should_test(a, b);
        let pairs = detect_contacts(&bodies, filter)?;
        let mut solver_bodies: Vec<SolverBody> = bodies
            .iter()
            .map(|b| SolverBody {
                center: b.state.pose.position,
                linear_velocity: b.state.linear_velocity,
                angular_velocity: b.state.angular_velocity,
                inverse_mass: inverse_effective_mass(&b.state, b.hydro.as_ref().map_or(Vec3::ZERO, |h| h.added_mass_diag)),
                inverse_inertia: b.state.inverse_inertia_world(),
            })
            .collect();
        let mut constraints: Vec<ContactConstraint> = pairs
            .iter()
            .map(|(pair, geometry)| {
                let (a, b) = (pair.0.index(), pair.1.index());
                let m = Material::combine(bodies[a].material, bodies[b].material);
                let point_velocity = |i: usize| {
                    let (v, w) = before[i];
                    v + w.cross(geometry.point - bodies[i].state.pose.position)
                };
                let approach = (point_velocity(b) - point_velocity(a)).dot(geometry.normal);
                ContactConstraint::prepare(a, b, &solver_bodies, *geometry, approach, m.restitution, m.friction, &self.solver, dt)
            })
            .collect();
        for _ in 0..self.solver.iterations {
            for c in constraints.iter_mut() {
                c.solve(&mut solver_bodies);
            }
        }
        for (b, s) in bodies.iter_mut().zip(&solver_bodies) {
            if !b.state.kinematic {
                b.state.linear_velocity = s.linear_velocity;
                b.state.angular_velocity = s.angular_velocity;
            }
        }

        // integrate poses
        for (i, b) in bodies.iter_mut().enumerate() {
            let s = &mut b.state;
            if let Some(target) = targets[i] {
                s.pose.position = target;
                continue;
            }
            s.pose.position += s.linear_velocity * dt;
            if s.angular_velocity != Vec3::ZERO {
                let dq = UnitQuat::from_rotation_vector(s.angular_velocity * dt);
                s.pose.orientation = dq.mul_quat(&s.pose.orientation).renormalized();
            }
        }

        for b in &bodies {
            if !b.state.is_finite() {
                return Err(PhysicsError::NonFinite {
                    body: b.name.clone(),
                    step: self.step_index,
                    detail: format!(
                        "position {} velocity {} angular {}",
                        b.state.pose.position, b.state.linear_velocity, b.state.angular_velocity
                    ),
                });
            }
        }

        let resolved: Vec<ResolvedContact> = constraints
            .iter()
            .zip(&pairs)
            .map(|(c, (pair, geometry))| ResolvedContact { pair: *pair, geometry: *geometry, impulse: c.accumulated.normal })
            .collect();
        let events = self.tracker.update(&resolved, dt);
        self.bodies = bodies;
        self.step_index += 1;
        Ok(StepReport { events })
    }

    /// Closes every open contact pair (Exit events), e.g. at the end of a run.
    pub fn close_contacts(&mut self) -> Vec<ContactEvent> {
        self.tracker.close_all()
    }

    /// SHA-256 over the full dynamic state, hex encoded.
    pub fn state_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.step_index.to_le_bytes());
        h.update(self.dt.to_bits().to_le_bytes());
        for b in &self.bodies {
            h.update(b.name.as_bytes());
            h.update([b.state.kinematic as u8]);
            let s = &b.state;
            let o = s.pose.orientation;
            for v in [s.pose.position, s.linear_velocity, s.angular_velocity] {
                for c in v.to_array() {
                    h.update(c.to_bits().to_le_bytes());
                }
            }
            for c in [o.w, o.x, o.y, o.z] {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        for p in self.tracker.active_pairs() {
            h.update(p.0 .0.to_le_bytes());
            h.update(p.1 .0.to_le_bytes());
        }
        hex_digest(h)
    }
}

pub(crate) fn hex_digest(h: Sha256) -> String {
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Narrow phase over all candidate pairs accepted by `filter`.
pub fn detect_contacts(
    bodies: &[Body],
    filter: impl Fn(&Body, &Body) -> bool,
) -> Result<Vec<(PairKey, crate::physics::shapes::ContactGeometry)>, PhysicsError> {
    let mut out = Vec::new();
    for i in 0..bodies.len() {
        for j in (i + 1)..bodies.len() {
            let (a, b) = (&bodies[i], &bodies[j]);
            if !filter(a, b) {
                continue;
            }
            let (Some(ca), Some(cb)) = (&a.collider, &b.collider) else { continue };
            if let Some(g) = collide(ca, &a.state.pose, cb, &b.state.pose)? {
                out.push((PairKey(BodyId(i as u32), BodyId(j as u32)), g));
            }
        }
    }
    Ok(out)
}
