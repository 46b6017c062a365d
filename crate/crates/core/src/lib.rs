//! Beam-hopping time-plan construction.
//!
//! A plan is a list of beam illumination patterns, each lit for an integer
//! weight, such that every beam's accumulated illumination equals its
//! integer demand. [`dp2`] builds plans by power-of-two decomposition,
//! [`exact`] finds plans with the fewest patterns, [`schedule`] maps a plan
//! onto a fixed-length cycle, [`testbed`] generates synthetic scenes and
//! [`bench`] measures capacity error and pattern counts across them.

pub mod bench;
pub mod dp2;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod schedule;
pub mod testbed;

pub use error::ModelError;
pub use model::{
    accumulated_weights, check_feasible, validate_instance, ConstraintSet, CycleConfig, Instance,
    Pattern, Plan, Report, Violation,
};
