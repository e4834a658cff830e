//! Contact lifecycle tracking and the sequential-impulse contact solver.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frames::{Mat3, Vec3};
use crate::physics::body::BodyId;
use crate::physics::shapes::ContactGeometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactPhase {
    Enter,
    Stay,
    Exit,
}

impl ContactPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactPhase::Enter => "enter",
            ContactPhase::Stay => "stay",
            ContactPhase::Exit => "exit",
        }
    }
}

/// Unordered body pair, stored with the lower id first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey(pub BodyId, pub BodyId);

impl PairKey {
    pub fn new(a: BodyId, b: BodyId) -> Self {
        if a <= b {
            PairKey(a, b)
        } else {
            PairKey(b, a)
        }
    }

    pub fn involves(&self, id: BodyId) -> bool {
        self.0 == id || self.1 == id
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactEvent {
    pub phase: ContactPhase,
    pub body_a: BodyId,
    pub body_b: BodyId,
    pub point: Vec3,
    /// Unit normal from `body_a` toward `body_b`.
    pub normal: Vec3,
    pub penetration: f64,
    /// Accumulated normal impulse applied this step, N·s.
    pub impulse: f64,
    /// `impulse / dt`; zero on exit.
    pub estimated_force: f64,
}

impl ContactEvent {
    pub fn pair(&self) -> PairKey {
        PairKey(self.body_a, self.body_b)
    }

    /// Normal contact force acting on `body` (zero if not part of the pair).
    pub fn force_on(&self, body: BodyId) -> Vec3 {
        if body == self.body_b {
            self.normal * self.estimated_force
        } else if body == self.body_a {
            -self.normal * self.estimated_force
        } else {
            Vec3::ZERO
        }
    }
}

/// A pair found touching during one step, with the impulse the solver applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedContact {
    pub pair: PairKey,
    pub geometry: ContactGeometry,
    pub impulse: f64,
}

/// Remembers which pairs touched on the previous step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContactTracker {
    active: BTreeMap<PairKey, ContactGeometry>,
}

impl ContactTracker {
    pub fn active_pairs(&self) -> impl Iterator<Item = &PairKey> {
        self.active.keys()
    }

    pub fn is_active(&self, pair: &PairKey) -> bool {
        self.active.contains_key(pair)
    }

    /// Classifies this step's contacts against the previous step's and
    /// returns events ordered by pair.
    pub fn update(&mut self, current: &[ResolvedContact], dt: f64) -> Vec<ContactEvent> {
        let previous: BTreeSet<PairKey> = self.active.keys().copied().collect();
        let mut events = contact_lifecycle(&previous, current, dt);
        for e in events.iter_mut().filter(|e| e.phase == ContactPhase::Exit) {
            if let Some(g) = self.active.get(&e.pair()) {
                e.point = g.point;
                e.normal = g.normal;
            }
        }
        self.active = current.iter().map(|c| (c.pair, c.geometry)).collect();
        events
    }

    /// Ends every open contact, e.g. when a run finishes.
    pub fn close_all(&mut self) -> Vec<ContactEvent> {
        let events = self.update(&[], 1.0);
        self.active.clear();
        events
    }
}

/// Enter for new pairs, Stay for persisting pairs, Exit (zero impulse and
/// force) for vanished pairs. Exit events carry a placeholder geometry the
/// tracker fills in from the last contact.
pub fn contact_lifecycle(previous: &BTreeSet<PairKey>, current: &[ResolvedContact], dt: f64) -> Vec<ContactEvent> {
    let mut events: Vec<ContactEvent> = Vec::with_capacity(current.len() + previous.len());
    let now: BTreeSet<PairKey> = current.iter().map(|c| c.pair).collect();
    for c in current {
        let phase = if previous.contains(&c.pair) { ContactPhase::Stay } else { ContactPhase::Enter };
        events.push(ContactEvent {
            phase,
            body_a: c.pair.0,
            body_b: c.pair.1,
            point: c.geometry.point,
            normal: c.geometry.normal,
            penetration: c.geometry.penetration,
            impulse: c.impulse,
            estimated_force: contact_force_estimate(c.impulse, dt),
        });
    }
    for gone in previous.difference(&now) {
        events.push(ContactEvent {
            phase: ContactPhase::Exit,
            body_a: gone.0,
            body_b: gone.1,
            point: Vec3::ZERO,
            normal: Vec3::Z,
            penetration: 0.0,
            impulse: 0.0,
            estimated_force: 0.0,
        });
    }
    events.sort_by_key(|e| e.pair());
    events
}

/// Force implied by a step impulse.
pub fn contact_force_estimate(impulse: f64, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    impulse / dt
}

/// Summed estimated force per pair for one step's events (zero on exit).
pub fn forces_by_pair(events: &[ContactEvent]) -> BTreeMap<PairKey, f64> {
    let mut out = BTreeMap::new();
    for e in events {
        *out.entry(e.pair()).or_insert(0.0) += e.estimated_force;
    }
    out
}

/// Velocity-level view of a body used by the solver. Kinematic bodies have
/// zero inverse mass and inertia.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverBody {
    pub center: Vec3,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
    pub inverse_mass: Mat3,
    pub inverse_inertia: Mat3,
}

impl SolverBody {
    pub fn point_velocity(&self, r: Vec3) -> Vec3 {
        self.linear_velocity + self.angular_velocity.cross(r)
    }

    fn apply(&mut self, impulse: Vec3, r: Vec3) {
        self.linear_velocity += self.inverse_mass.mul_vec(impulse);
        self.angular_velocity += self.inverse_inertia.mul_vec(r.cross(impulse));
    }

    /// `K` such that a unit impulse at `r` changes the point velocity by `K·p`.
    fn point_mass_matrix(&self, r: Vec3) -> Mat3 {
        let rx = Mat3::skew(r);
        // -[r]x I^-1 [r]x
        let ang = rx.mul_mat(&self.inverse_inertia).mul_mat(&rx);
        self.inverse_mass.add(&Mat3::from_rows(-ang.rows[0], -ang.rows[1], -ang.rows[2]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    /// Positional correction factor.
    pub baumgarte: f64,
    /// Penetration tolerated without correction, m.
    pub slop: f64,
    /// Closing speeds below this do not bounce, m/s.
    pub restitution_threshold: f64,
    pub iterations: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { baumgarte: 0.2, slop: 1e-3, restitution_threshold: 0.05, iterations: 10 }
    }
}

/// Impulse delivered to body `b` (body `a` receives the negation).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContactImpulse {
    pub normal: f64,
    pub tangent: Vec3,
}

impl ContactImpulse {
    pub fn vector(&self, n: Vec3) -> Vec3 {
        n * self.normal + self.tangent
    }
}

/// One persistent constraint inside the iterative solver.
#[derive(Clone, Debug)]
pub struct ContactConstraint {
    pub a: usize,
    pub b: usize,
    pub geometry: ContactGeometry,
    ra: Vec3,
    rb: Vec3,
    normal_mass: f64,
    tangents: [Vec3; 2],
    tangent_inverse: Option<[[f64; 2]; 2]>,
    target_velocity: f64,
    friction: f64,
    pub accumulated: ContactImpulse,
    accumulated_t: [f64; 2],
}

impl ContactConstraint {
    /// Precomputes effective masses and the velocity target from the
    /// pre-solve closing speed. `approach` is the normal velocity before this
    /// step's forces. Restitution applies only if it exceeds the threshold
    /// and rebounds at `e` times that speed, so velocity gained from gravity
    /// within the step never bounces a resting body.
    #[allow(clippy::too_many_arguments)]
    pub fn prepare(
        a: usize,
        b: usize,
        bodies: &[SolverBody],
        geometry: ContactGeometry,
        approach: f64,
        restitution: f64,
        friction: f64,
        params: &SolverParams,
        dt: f64,
    ) -> Self {
        let (ba, bb) = (&bodies[a], &bodies[b]);
        let n = geometry.normal;
        let ra = geometry.point - ba.center;
        let rb = geometry.point - bb.center;
        let k = ba.point_mass_matrix(ra).add(&bb.point_mass_matrix(rb));
        let kn = n.dot(k.mul_vec(n));
        let normal_mass = if kn > 1e-15 { 1.0 / kn } else { 0.0 };

        let t1 = n.any_orthonormal();
        let t2 = n.cross(t1);
        let tangents = [t1, t2];
        let k11 = t1.dot(k.mul_vec(t1));
        let k12 = t1.dot(k.mul_vec(t2));
        let k22 = t2.dot(k.mul_vec(t2));
        let det = k11 * k22 - k12 * k12;
        let tangent_inverse =
            (det > 1e-24).then(|| [[k22 / det, -k12 / det], [-k12 / det, k11 / det]]);

        let vn = (bb.point_velocity(rb) - ba.point_velocity(ra)).dot(n);
        let bounce = if approach < -params.restitution_threshold && vn < 0.0 { -restitution * approach } else { 0.0 };
        let bias = params.baumgarte / dt * (geometry.penetration - params.slop).max(0.0);
        ContactConstraint {
            a,
            b,
            geometry,
            ra,
            rb,
            normal_mass,
            tangents,
            tangent_inverse,
            target_velocity: bounce.max(bias),
            friction,
            accumulated: ContactImpulse::default(),
            accumulated_t: [0.0; 2],
        }
    }

    fn relative_velocity(&self, bodies: &[SolverBody]) -> Vec3 {
        bodies[self.b].point_velocity(self.rb) - bodies[self.a].point_velocity(self.ra)
    }

    fn push(&self, bodies: &mut [SolverBody], impulse: Vec3) {
        bodies[self.a].apply(-impulse, self.ra);
        bodies[self.b].apply(impulse, self.rb);
    }

    /// One Gauss-Seidel pass: normal row, then the friction disc.
    pub fn solve(&mut self, bodies: &mut [SolverBody]) {
        if self.normal_mass == 0.0 {
            return;
        }
        let n = self.geometry.normal;
        let vn = self.relative_velocity(bodies).dot(n);
        let delta = (self.target_velocity - vn) * self.normal_mass;
        let new_total = (self.accumulated.normal + delta).max(0.0);
        let applied = new_total - self.accumulated.normal;
        self.accumulated.normal = new_total;
        if applied != 0.0 {
            self.push(bodies, n * applied);
        }

        let Some(kinv) = self.tangent_inverse else { return };
        let v = self.relative_velocity(bodies);
        let vt = [v.dot(self.tangents[0]), v.dot(self.tangents[1])];
        let d = [-(kinv[0][0] * vt[0] + kinv[0][1] * vt[1]), -(kinv[1][0] * vt[0] + kinv[1][1] * vt[1])];
        let old = self.accumulated_t;
        let mut total = [old[0] + d[0], old[1] + d[1]];
        let limit = self.friction * self.accumulated.normal;
        let mag = (total[0] * total[0] + total[1] * total[1]).sqrt();
        if mag > limit {
            let s = if mag > 0.0 { limit / mag } else { 0.0 };
            total = [total[0] * s, total[1] * s];
        }
        self.accumulated_t = total;
        let step = self.tangents[0] * (total[0] - old[0]) + self.tangents[1] * (total[1] - old[1]);
        self.accumulated.tangent = self.tangents[0] * total[0] + self.tangents[1] * total[1];
        if step != Vec3::ZERO {
            self.push(bodies, step);
        }
    }
}

/// Resolves a single contact between two bodies in one pass: restitution
/// along the normal, then Coulomb friction clamped to `μ·j`. Separating
/// contacts and kinematic-kinematic pairs receive zero impulse.
pub fn resolve_impulse(
    a: &mut SolverBody,
    b: &mut SolverBody,
    geometry: ContactGeometry,
    restitution: f64,
    friction: f64,
) -> ContactImpulse {
    let params = SolverParams { baumgarte: 0.0, slop: 0.0, restitution_threshold: 0.0, iterations: 1 };
    let mut pair = [*a, *b];
    let approach = (b.point_velocity(geometry.point - b.center) - a.point_velocity(geometry.point - a.center)).dot(geometry.normal);
    let mut c = ContactConstraint::prepare(0, 1, &pair, geometry, approach, restitution, friction, &params, 1.0);
    c.solve(&mut pair);
    *a = pair[0];
    *b = pair[1];
    c.accumulated
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_mass(m: f64, center: Vec3, v: Vec3) -> SolverBody {
        SolverBody {
            center,
            linear_velocity: v,
            angular_velocity: Vec3::ZERO,
            inverse_mass: Mat3::diagonal(Vec3::splat(1.0 / m)),
            inverse_inertia: Mat3::ZERO,
        }
    }

    fn head_on() -> ContactGeometry {
        ContactGeometry { point: Vec3::new(0.5, 0.0, 0.0), normal: Vec3::X, penetration: 0.0 }
    }

    #[test]
    fn elastic_equal_masses_exchange_velocities() {
        let mut a = point_mass(1.0, Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0));
        let mut b = point_mass(1.0, Vec3::X, Vec3::new(-0.5, 0.0, 0.0));
        resolve_impulse(&mut a, &mut b, head_on(), 1.0, 0.0);
        assert_eq!(a.linear_velocity, Vec3::new(-0.5, 0.0, 0.0));
        assert_eq!(b.linear_velocity, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn perfectly_inelastic_kills_normal_velocity() {
        let mut a = point_mass(2.0, Vec3::ZERO, Vec3::new(1.3, 0.2, 0.0));
        let mut b = point_mass(0.7, Vec3::X, Vec3::new(-0.4, 0.0, 0.1));
        resolve_impulse(&mut a, &mut b, head_on(), 0.0, 0.0);
        let vn = (b.linear_velocity - a.linear_velocity).dot(Vec3::X);
        assert!(vn.abs() < 1e-9);
    }

    #[test]
    fn separating_contact_gets_nothing() {
        let mut a = point_mass(1.0, Vec3::ZERO, Vec3::new(-1.0, 0.0, 0.0));
        let mut b = point_mass(1.0, Vec3::X, Vec3::ZERO);
        let j = resolve_impulse(&mut a, &mut b, head_on(), 0.5, 0.5);
        assert_eq!(j, ContactImpulse::default());
    }

    #[test]
    fn two_kinematic_bodies_get_zero_impulse() {
        let still = |c| SolverBody {
            center: c,
            linear_velocity: Vec3::new(1.0, 0.0, 0.0),
            angular_velocity: Vec3::ZERO,
            inverse_mass: Mat3::ZERO,
            inverse_inertia: Mat3::ZERO,
        };
        let (mut a, mut b) = (still(Vec3::ZERO), still(Vec3::X));
        b.linear_velocity = Vec3::ZERO;
        let j = resolve_impulse(&mut a, &mut b, head_on(), 0.5, 0.5);
        assert_eq!(j.normal, 0.0);
    }

    #[test]
    fn kinematic_wall_reflects_with_restitution() {
        let mut wall = point_mass(1.0, Vec3::X, Vec3::ZERO);
        wall.inverse_mass = Mat3::ZERO;
        let mut ball = point_mass(3.0, Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0));
        resolve_impulse(&mut ball, &mut wall, head_on(), 0.5, 0.0);
        assert!((ball.linear_velocity.x + 1.0).abs() < 1e-12);
        assert_eq!(wall.linear_velocity, Vec3::ZERO);
    }

    #[test]
    fn friction_bounded_by_coulomb_cone() {
        let mut a = point_mass(1.0, Vec3::ZERO, Vec3::new(0.1, 5.0, 0.0));
        let mut b = point_mass(1.0, Vec3::X, Vec3::ZERO);
        let j = resolve_impulse(&mut a, &mut b, head_on(), 0.0, 0.3);
        assert!(j.tangent.norm() <= 0.3 * j.normal + 1e-12);
        assert!(j.tangent.norm() > 0.0);
    }

    #[test]
    fn lifecycle_grazing_pass() {
        let (a, b) = (BodyId(0), BodyId(3));
        let pair = PairKey::new(b, a);
        let touch = ResolvedContact {
            pair,
            geometry: ContactGeometry { point: Vec3::ZERO, normal: Vec3::Z, penetration: 0.001 },
            impulse: 0.02,
        };
        let mut tracker = ContactTracker::default();
        let mut phases = Vec::new();
        for step in 0..9 {
            let current: Vec<ResolvedContact> = if (2..=7).contains(&step) { vec![touch] } else { vec![] };
            let events = tracker.update(&current, 0.02);
            phases.push(events.iter().map(|e| e.phase).collect::<Vec<_>>());
            for e in &events {
                if e.phase == ContactPhase::Exit {
                    assert_eq!(e.impulse, 0.0);
                    assert_eq!(e.estimated_force, 0.0);
                    assert_eq!(e.normal, Vec3::Z);
                } else {
                    assert!((e.estimated_force - 1.0).abs() < 1e-12);
                }
            }
        }
        use ContactPhase::*;
        assert_eq!(phases[0], vec![]);
        assert_eq!(phases[2], vec![Enter]);
        for p in &phases[3..=7] {
            assert_eq!(p, &vec![Stay]);
        }
        assert_eq!(phases[8], vec![Exit]);
    }

    #[test]
    fn independent_pairs_tracked_separately() {
        let g = ContactGeometry { point: Vec3::ZERO, normal: Vec3::Z, penetration: 0.0 };
        let p1 = PairKey::new(BodyId(0), BodyId(1));
        let p2 = PairKey::new(BodyId(0), BodyId(2));
        let mut t = ContactTracker::default();
        let e = t.update(&[ResolvedContact { pair: p1, geometry: g, impulse: 0.0 }], 0.02);
        assert_eq!(e.len(), 1);
        let e = t.update(
            &[ResolvedContact { pair: p1, geometry: g, impulse: 0.0 }, ResolvedContact { pair: p2, geometry: g, impulse: 0.0 }],
            0.02,
        );
        assert_eq!(e.iter().map(|e| (e.pair(), e.phase)).collect::<Vec<_>>(), vec![(p1, ContactPhase::Stay), (p2, ContactPhase::Enter)]);
        let e = t.update(&[ResolvedContact { pair: p2, geometry: g, impulse: 0.0 }], 0.02);
        assert_eq!(e.iter().map(|e| (e.pair(), e.phase)).collect::<Vec<_>>(), vec![(p1, ContactPhase::Exit), (p2, ContactPhase::Stay)]);
    }

    #[test]
    fn no_contact_no_force() {
        assert!(forces_by_pair(&[]).is_empty());
        assert_eq!(contact_force_estimate(0.0, 0.02), 0.0);
    }
}
