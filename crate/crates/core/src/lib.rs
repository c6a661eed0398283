//! Contract design for wireless energy trading between one data access point
//! (DAP) and `N` energy access points (EAPs) whose types are private.
//!
//! The DAP offers a menu of energy-reward items `(q_k, pi_k)`, one per EAP
//! type. This crate computes the menu that maximizes the DAP's expected
//! utility subject to individual rationality and incentive compatibility,
//! checks feasibility of arbitrary menus, and compares the result with the
//! complete-information optimum and a uniform linear price.
//!
//! Module map:
//!
//! * [`model`]: domain types and the closed-form utility and welfare formulas.
//! * [`distribution`]: composition enumeration and multinomial weights.
//! * [`solver`]: the reduced concave program and reward recovery.
//! * [`baselines`]: complete-information and linear-pricing benchmarks.
//! * [`verify`]: IR/IC/self-reveal checks and a brute-force grid oracle.
//! * [`scenario`]: physical scenarios, type ladders, and welfare sweeps.
//! * [`io`]: run configuration and CSV schemas.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod distribution;
mod error;
pub mod io;
pub mod model;
pub mod scenario;
mod search;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Composition, Contract, ContractItem, EapPhysical, PhysicalParams, TypeProfile};
pub use solver::{Market, SolveResult, SolverConfig};
