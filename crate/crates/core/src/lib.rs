//! Idle-descent trajectory optimization in altitude-dependent winds.
//!
//! Generates fuel- or emission-minimizing en route descent trajectories by
//! singular/boundary-arc synthesis with forward and backward integration,
//! verifies the first-order optimality conditions on the result, and
//! cross-checks the optimum against an independent dynamic-programming
//! solution on a coarse grid.

pub mod airmodel;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod numerics;
pub mod optimal;
pub mod performance;
pub mod samples;
pub mod scenario;
pub mod units;
pub mod verify;

pub use error::{Error, Result};
