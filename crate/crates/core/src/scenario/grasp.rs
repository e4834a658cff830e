//! Grasping as a kinematic attachment between the two arm tips and an object.

use crate::frames::{compose_unchecked, Pose};
use crate::physics::BodyId;
use crate::sim::Simulation;

/// Arm limb indices.
pub const ARMS: [usize; 2] = [0, 1];

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GraspState {
    pub attached_object: Option<BodyId>,
    pub grip_commanded: bool,
    /// Object pose in the grasp frame, fixed at attach time.
    pub attach_offset: Pose,
    /// Set once the object has been let go after a grasp.
    pub released: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraspEvent {
    Attached,
    Released,
}

/// Midpoint of the arm tips, oriented halfway between them.
pub fn grasp_frame(sim: &Simulation) -> Pose {
    let a = sim.tip_pose(ARMS[0]);
    let b = sim.tip_pose(ARMS[1]);
    Pose::new(a.position.lerp(b.position, 0.5), a.orientation.slerp(&b.orientation, 0.5))
}

/// Signed distance from each arm tip to the object's surface.
pub fn tip_clearances(sim: &Simulation, object: BodyId) -> Option<[f64; 2]> {
    let body = sim.world().body(object);
    let collider = body.collider.as_ref()?;
    let pose = body.state.pose;
    Some(ARMS.map(|i| collider.signed_distance(&pose, sim.tip_position(i))))
}

/// Attaches, carries or releases `object` according to the grip command.
/// Call once per step after the world has advanced.
pub fn grasp_update(grasp: &mut GraspState, sim: &mut Simulation, object: BodyId, grasp_distance: f64) -> Option<GraspEvent> {
    grasp.grip_commanded = sim.grip_commanded();
    match (grasp.attached_object, grasp.grip_commanded) {
        (None, true) => {
            let close = tip_clearances(sim, object).is_some_and(|d| d.iter().all(|d| *d <= grasp_distance));
            if !close {
                return None;
            }
            let frame = grasp_frame(sim);
            let world = sim.world_mut();
            grasp.attach_offset = compose_unchecked(&frame.inverse(), &world.body(object).state.pose);
            world.set_kinematic(object, true);
            world.body_mut(object).state.linear_velocity = Default::default();
            world.body_mut(object).state.angular_velocity = Default::default();
            grasp.attached_object = Some(object);
            Some(GraspEvent::Attached)
        }
        (Some(id), true) => {
            let target = compose_unchecked(&grasp_frame(sim), &grasp.attach_offset);
            sim.world_mut().set_kinematic_pose(id, target);
            None
        }
        (Some(id), false) => {
            sim.world_mut().set_kinematic(id, false);
            grasp.attached_object = None;
            grasp.released = true;
            Some(GraspEvent::Released)
        }
        (None, false) => None,
    }
}
