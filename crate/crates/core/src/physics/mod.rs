//! Fixed-step rigid-body world with hydrodynamic loads and impulse contacts.
//!
//! Step order (semi-implicit Euler): accumulate gravity, buoyancy, drag and
//! external loads; update velocities through the added-mass tensor; detect
//! and resolve contacts with sequential impulses; integrate poses; emit
//! Enter/Stay/Exit contact events.

pub mod body;
pub mod contact;
pub mod hydro;
pub mod shapes;
pub mod world;

pub use body::{Body, BodyId, Material, RigidBodyState, Trajectory, Waypoint};
pub use contact::{
    contact_force_estimate, contact_lifecycle, forces_by_pair, resolve_impulse, ContactEvent, ContactImpulse,
    ContactPhase, ContactTracker, PairKey, ResolvedContact, SolverBody, SolverParams,
};
pub use hydro::{
    apply_added_mass, buoyancy_force, drag_force, CurrentField, CurrentModulation, HydroParams, Wrench,
    SEAWATER_DENSITY,
};
pub use shapes::{collide, ColliderShape, ContactGeometry};
pub use world::{detect_contacts, StepReport, World, DEFAULT_DT, DEFAULT_GRAVITY};
