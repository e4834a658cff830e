pub mod hub;
pub mod messages;
pub mod protocol;
pub mod server;
pub mod sim_loop;
pub mod topics;

pub use server::{start, BridgeConfig, BridgeHandle, DEFAULT_BIND};
pub use sim_loop::{Driver, LoopOutcome, LoopProbe, Pacing};
