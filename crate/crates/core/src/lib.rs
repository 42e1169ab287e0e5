//! Fleet operations toolkit for an electric Mobility-as-a-Service system.
//!
//! Builds a day of operations — serving travel requests, charging and
//! vehicle-to-grid trading, with battery degradation priced per kWh of
//! throughput — as a mixed-integer linear program over a transition DAG,
//! solves it through external MILP solvers or a built-in exhaustive backend,
//! and reproduces the standard operational reports (profit breakdown, grid
//! profile, battery-price sweep).
//!
//! The numeric kernel is generic over the scalar type ([`Scalar`]); the
//! aliases at the crate root fix it to `f64`, which is what the CLI uses.

pub mod analysis;
pub mod dag;
pub mod degradation;
pub mod error;
pub mod milp;
pub mod oracle;
pub mod plan;
pub mod scalar;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Tie-break cost on every kWh of charge and discharge, EUR/kWh. Keeps
/// simultaneous charge+discharge strictly dominated even at zero prices and
/// zero battery price, so plan extraction is unambiguous.
pub const TIE_BREAK_EUR_PER_KWH: f64 = 1e-9;

pub type Scenario64 = scenario::Scenario<f64>;
pub type TransitionGraph64 = dag::TransitionGraph<f64>;
pub type DegradationParams64 = degradation::DegradationParams<f64>;
pub type MilpModel64 = milp::MilpModel<f64>;
pub type FleetPlan64 = plan::FleetPlan<f64>;
