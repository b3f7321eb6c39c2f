//! Probabilistic verification of the abstract search-and-retrieve mission.
//!
//! A mission is abstracted to a grid-world MDP written in a guarded-command
//! language ([`model`]), expanded into an explicit state space
//! ([`explore`]) and solved for optimal reachability probabilities and
//! expected rewards ([`solve`]). Models can be written as and read from
//! PRISM-syntax text ([`prism`]). [`scenario`] generates the mission model
//! and [`bounds`] sweeps object placements to bound simulation results.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod explore;
pub mod expr;
pub mod mdp;
pub mod model;
pub mod prism;
pub mod scenario;
pub mod solve;

pub use error::VerifyError;
pub use mdp::Mdp;
pub use model::GuardedCommandModel;
pub use solve::{expected_reward, reach_probability, Opt, SolveOptions};
