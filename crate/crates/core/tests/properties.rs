use proptest::prelude::*;

use marun::frames::{Mat3, Pose, Vec3};
use marun::limb::{forward_limb_model, LimbConfig, TendonCommand};
use marun::physics::contact::{resolve_impulse, SolverBody};
use marun::physics::shapes::ContactGeometry;
use marun::physics::{Body, ColliderShape, RigidBodyState, World};
use marun::scenario::Scene;
use marun::sim::{Command, Simulation};
use marun::vehicle::PropulsionCommand;

fn arb_vec(scale: f64) -> impl Strategy<Value = Vec3> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn arb_unit() -> impl Strategy<Value = Vec3> {
    arb_vec(1.0).prop_filter("non-degenerate", |v| v.norm() > 0.1).prop_map(|v| v / v.norm())
}

fn solver_body(center: Vec3, v: Vec3, w: Vec3, m: f64, i: Vec3) -> SolverBody {
    SolverBody {
        center,
        linear_velocity: v,
        angular_velocity: w,
        inverse_mass: Mat3::diagonal(Vec3::splat(1.0 / m)),
        inverse_inertia: Mat3::diagonal(Vec3::new(1.0 / i.x, 1.0 / i.y, 1.0 / i.z)),
    }
}

fn kinetic(b: &SolverBody, m: f64, i: Vec3) -> f64 {
    let w = b.angular_velocity;
    0.5 * m * b.linear_velocity.dot(b.linear_velocity) + 0.5 * (i.x * w.x * w.x + i.y * w.y * w.y + i.z * w.z * w.z)
}

fn sim() -> Simulation {
    Scene::empty().build_simulation(0.02).expect("default robot")
}

fn arb_commands() -> impl Strategy<Value = Vec<(u8, [f64; 4], [f64; 2])>> {
    prop::collection::vec((0u8..5, [-1.0..1.0f64, -1.0..1.0, -1.0..1.0, -1.0..1.0], [-1.0..1.0f64, -1.0..1.0]), 1..40)
}

fn apply(sim: &mut Simulation, (which, v, axes): &(u8, [f64; 4], [f64; 2])) {
    let cmd = match *which {
        4 => Command::Vehicle(PropulsionCommand::new(v[0], v[1], v[2], v[3])),
        limb => Command::Limb { limb: limb as usize, axes: *axes, grip: None },
    };
    sim.apply(&cmd);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn impact_conserves_momentum_and_never_adds_energy(
        ma in 0.1..20.0f64, mb in 0.1..20.0f64,
        ia in (0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z)),
        ib in (0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z)),
        va in arb_vec(3.0), vb in arb_vec(3.0), wa in arb_vec(5.0), wb in arb_vec(5.0),
        normal in arb_unit(), offset in arb_vec(0.2),
        e in 0.0..=1.0f64, mu in 0.0..1.5f64,
    ) {
        let point = Vec3::new(0.0, 0.0, 0.0);
        let mut a = solver_body(point - normal * 0.3 + offset, va, wa, ma, ia);
        let mut b = solver_body(point + normal * 0.3 + offset, vb, wb, mb, ib);
        let geometry = ContactGeometry { point, normal, penetration: 0.001 };
        let p0 = a.linear_velocity * ma + b.linear_velocity * mb;
        let ke0 = kinetic(&a, ma, ia) + kinetic(&b, mb, ib);
        resolve_impulse(&mut a, &mut b, geometry, e, mu);
        let p1 = a.linear_velocity * ma + b.linear_velocity * mb;
        prop_assert!((p1 - p0).norm() <= 1e-9);
        prop_assert!(kinetic(&a, ma, ia) + kinetic(&b, mb, ib) <= ke0 + 1e-9);
    }

    #[test]
    fn correction_never_deepens_penetration(
        ra in 0.05..0.3f64, rb in 0.05..0.3f64, depth in 0.0..0.02f64, dir in arb_unit(),
        ma in 0.1..10.0f64, mb in 0.1..10.0f64,
    ) {
        let mut w = World::new(0.02);
        w.gravity = Vec3::ZERO;
        let ball = |name: &str, p: Vec3, m: f64, r: f64| {
            let shape = ColliderShape::Sphere { radius: r };
            Body::new(name, RigidBodyState::dynamic(Pose::from_position(p), m, shape.solid_inertia(m))).with_collider(shape)
        };
        w.add_body(ball("a", Vec3::ZERO, ma, ra)).unwrap();
        w.add_body(ball("b", dir * (ra + rb - depth), mb, rb)).unwrap();
        let before = w.detect_contacts().unwrap()[0].1.penetration;
        w.step(&[]).unwrap();
        let after = w.detect_contacts().unwrap().first().map_or(0.0, |c| c.1.penetration);
        prop_assert!(after <= before + 1e-12, "{before} -> {after}");
    }

    #[test]
    fn forward_chain_is_closed(t in [0.0..20.0f64, 0.0..20.0, 0.0..20.0, 0.0..20.0]) {
        let cfg = LimbConfig::default();
        let shape = forward_limb_model(&cfg, &TendonCommand { tensions: t });
        prop_assert_eq!(shape.segment_poses[0].position, Vec3::ZERO);
        for w in shape.segment_poses.windows(2) {
            prop_assert!((w[1].position.distance(w[0].position) - cfg.segment_length()).abs() < 1e-12);
        }
        prop_assert!((shape.segment_length * cfg.segment_count as f64 - cfg.total_length).abs() < 1e-12);
    }

    #[test]
    fn published_limbs_stay_closed(cmds in arb_commands()) {
        let mut s = sim();
        for c in &cmds {
            apply(&mut s, c);
            s.step(&[]).unwrap();
        }
        for limb in 0..4 {
            let state = s.limb_state(limb);
            for w in state.segment_poses.windows(2) {
                prop_assert!((w[1].position.distance(w[0].position) - state.segment_length).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vehicle_speed_stays_bounded(cmds in prop::collection::vec([-1.0..1.0f64, -1.0..1.0, -1.0..1.0, -1.0..1.0], 1..20)) {
        let mut s = sim();
        for c in &cmds {
            s.apply(&Command::Vehicle(PropulsionCommand::new(c[0], c[1], c[2], c[3])));
            for _ in 0..25 {
                s.step(&[]).unwrap();
                prop_assert!(s.world().body(s.vehicle_id()).state.linear_velocity.norm() < 3.0);
            }
        }
    }

    #[test]
    fn same_commands_same_hashes(cmds in arb_commands()) {
        let (mut a, mut b) = (sim(), sim());
        for c in &cmds {
            apply(&mut a, c);
            apply(&mut b, c);
            a.step(&[]).unwrap();
            b.step(&[]).unwrap();
            prop_assert_eq!(a.state_hash(), b.state_hash());
        }
    }
}
