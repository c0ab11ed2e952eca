//! Resilient consensus for multi-robot networks with malicious agents.
//!
//! Legitimate agents blend their initial state with a trust-weighted average
//! of their neighbours' states. The blend factor (the confidence schedule)
//! decays over time, while trust in each neighbour is the sign of a running
//! sum of noisy, physically derived observations.
//!
//! The crate is split into:
//! - [`graph`]: communication graphs, nominal weights, primitivity and
//!   spectral quantities;
//! - [`trust`]: trust observations, the aggregate trust ledger and
//!   classification times;
//! - [`protocol`]: confidence schedules, adversaries and the update engine;
//! - [`bounds`]: closed-form deviation and convergence-rate bounds;
//! - [`harness`]: scenarios, seeded Monte Carlo ensembles and bound validation.

pub mod bounds;
pub mod error;
pub mod graph;
pub mod harness;
pub mod protocol;
pub mod rng;
pub mod trust;

pub use error::{Error, Result};
