//! Simulation and design library for power control games in single-hop
//! wireless networks under intervention.
//!
//! An intervention device monitors user transmit powers (individually or as an
//! aggregate receive power) and commits to a rule that injects interference
//! when users deviate from a target power profile. This crate provides:
//!
//! - the game primitives (SINR, rule evaluation, best responses, equilibrium
//!   checks and brute-force enumeration) in [`model`],
//! - closed-form designers and budget calculators for first-order rules in
//!   [`design`],
//! - dynamic adjustment processes with intermediate target sequences in
//!   [`adjust`],
//! - the blind estimation protocol run by the device in [`estimate`],
//! - welfare objectives and target-profile selection in [`welfare`],
//! - scenario files and geometry-to-gain conversion in [`scenario`].

pub mod adjust;
pub mod design;
pub mod error;
pub mod estimate;
pub mod model;
pub mod scenario;
pub mod welfare;

pub use error::{Error, Result};
pub use model::{
    best_response, best_response_grid, enumerate_equilibria, is_nash, sinr,
    strongly_sustains_on_grid, AggregateRule, DeviceLocations, EquilibriumSet, ExtremeRule,
    GenericRule, IndividualRule, NetworkParams, PowerProfile, Rule,
};
