//! Coarse payoff-assessment learning: an agent values similarity classes of
//! alternatives rather than the alternatives themselves, reinforces the
//! valuation of whatever class it picks, and chooses by a logit rule.
//!
//! The crate covers the whole pipeline:
//!
//! - [`tree`]: raw decision trees, the reduction to class subsets, support
//!   checks and payoff boxes.
//! - [`dynamics`]: the logit policy, the stochastic learning process and the
//!   mean-field ODE.
//! - [`equilibrium`]: fixed points at finite sensitivity, continuation in
//!   `beta`, and their limits.
//! - [`stability`]: Jacobians, spectra and sign-structure checks.
//! - [`reproduce`]: the worked two-class examples as a pass/fail suite.

mod error;

pub mod dynamics;
pub mod equilibrium;
pub mod fixtures;
pub mod format;
pub mod reproduce;
pub mod stability;
pub mod tree;

pub use dynamics::Valuations;
pub use error::{CpalError, Result};
