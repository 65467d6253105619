//! Simulation of competing learners in a complete Arrow-security market.
//!
//! Agents invest wealth across states each step; prices clear the market and
//! wealth flows to agents that bet well on realized states. The crate exposes
//! the market stepper, a family of learning agents, regret accounting, and
//! the experiment drivers used by the `msl` binary.

pub mod agents;
pub mod error;
pub mod experiments;
pub mod market;
pub mod regret;
pub mod rng;
pub mod shift;
pub mod simplex;
pub mod verify;

pub use error::{Error, Result};
pub use simplex::SimplexVector;
