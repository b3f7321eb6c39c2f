//! Quadrotor search-and-retrieve mission simulator.
//!
//! A single vehicle takes off, sweeps a lawnmower search pattern with a
//! downward camera, picks up coloured targets with a grasper and carries
//! them to a drop site, subject to random rotor, grasper and system faults.
//! [`engine::run_mission`] simulates one mission and [`batch::monte_carlo`]
//! aggregates many.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod config;
pub mod control;
pub mod engine;
pub mod error;
pub mod export;
pub mod guidance;
pub mod perception;
pub mod plant;
pub mod spatial;

pub use batch::{monte_carlo, BatchStats};
pub use engine::{run_mission, MissionRecord, Outcome, ScenarioConfig};
pub use error::SimError;
pub use guidance::Mode;
