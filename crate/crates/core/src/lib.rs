//! Load-balanced call admission for a network of SIP servers.
//!
//! A central controller sees, once per time slot, how many calls each server
//! wants to place towards every other server. It decides how many of them to
//! admit and over which server-to-server relays to route them, trading
//! admitted calls against CPU and memory usage. The decision is a linear
//! program over per-arc relay flows ([`admission`]), solved by a small dense
//! simplex ([`lp`]). Plans are split into per-path routes and made integral by
//! [`flowpaths`], cross-checked against a path-based formulation by
//! [`oracle`], and replayed slot by slot in [`simulator`].
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the file formats and the
//! simulator use.

// Matrix code reads better with explicit index loops.
#![allow(clippy::needless_range_loop)]

pub mod admission;
pub mod calibration;
pub mod fixtures;
pub mod flowpaths;
pub mod instances;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod report;
pub mod scalar;
pub mod simulator;
pub mod sweep;

pub use scalar::Scalar;

/// Default scalar type.
pub type Real = f64;

pub type Scenario = model::Scenario<f64>;
pub type AdmissionPlan = model::AdmissionPlan<f64>;
pub type LinearProgram = lp::LinearProgram<f64>;

pub type Scenario32 = model::Scenario<f32>;
pub type AdmissionPlan32 = model::AdmissionPlan<f32>;
pub type LinearProgram32 = lp::LinearProgram<f32>;
