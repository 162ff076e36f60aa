//! A desk-scale laboratory for composable security of quantum key
//! distribution.
//!
//! - [`quantum`]: density operators, cq-states, POVMs, trace distance and
//!   Shannon information.
//! - [`security`]: correctness, robustness and a two-sided secrecy bracket
//!   from trace distance, plus accessible-information lower bounds.
//! - [`attack`]: the conjugate-basis parity state whose accessible
//!   information is small while a one-time pad keyed with it leaks a message
//!   bit with certainty.
//! - [`keystream`]: per-round error budgets, schedules, a planner and a
//!   ledger-checked simulator for a continuous key stream.
//! - [`composition`]: real/ideal protocol pairs, distinguishers, advantage
//!   estimation, the one-time pad and a textbook-RSA malleability demo.

pub mod attack;
pub mod composition;
pub mod error;
pub mod keystream;
pub mod quantum;
pub mod security;
pub mod stats;

pub use error::{Error, Result};
