//! Learning dynamics: the logit policy, the stochastic reinforcement process
//! and its mean-field ODE `v' = g(v) - v`.

mod ode;
mod policy;
mod process;

use std::ops::{Deref, DerefMut};

use serde::Serialize;

pub use ode::integrate;
pub use policy::{g_map, mean_field_rhs, policy, state_policy, Policy};
pub(crate) use policy::{class_weights, finite_logz};
pub use process::{
    simulate, step, Event, Mode, PayoffModel, SimConfig, Simulator, StepRule, Trajectory,
};

/// A valuation for every similarity class, in class order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Valuations(pub Vec<f64>);

impl Valuations {
    pub fn new(v: Vec<f64>) -> Self {
        Valuations(v)
    }

    pub fn zeros(n: usize) -> Self {
        Valuations(vec![0.0; n])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Sup-norm distance.
    pub fn dist(&self, other: &[f64]) -> f64 {
        sup_dist(&self.0, other)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Valuations {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Valuations {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Valuations {
    fn from(v: Vec<f64>) -> Self {
        Valuations(v)
    }
}

impl From<&[f64]> for Valuations {
    fn from(v: &[f64]) -> Self {
        Valuations(v.to_vec())
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
