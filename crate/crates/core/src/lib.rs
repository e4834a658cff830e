//! Headless underwater teleoperation simulator for a squid-like intervention
//! robot with four tendon-driven soft limbs.
//!
//! The crate is organized bottom-up:
//!
//! - [`frames`]: vector/quaternion algebra and the sim ↔ render frame mapping
//! - [`physics`]: fixed-step rigid-body world, hydrodynamics, contacts
//! - [`limb`]: tendon forward/inverse models, proxy mapping, discretization
//! - [`vehicle`]: propulsion commands and speed ramping
//! - [`sim`]: the robot assembled into a world, stepped from commands
//! - [`scenario`]: scene files, benchmark tasks, grasping, metrics
//! - [`bridge`]: rosbridge-style JSON/WebSocket pub-sub server
//! - [`replay`]: run recording, fingerprints and replay verification
//! - [`cli`]: the `marun` command-line entry point

pub mod bridge;
pub mod cli;
pub mod error;
pub mod frames;
pub mod limb;
pub mod physics;
pub mod replay;
pub mod scenario;
pub mod sim;
pub mod vehicle;

pub use error::{ConfigError, FrameError, MetricsError, PhysicsError, ReplayError, ScenarioError};
pub use frames::{FrameConvention, Pose, UnitQuat, Vec3};
