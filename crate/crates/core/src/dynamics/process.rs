use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::policy::state_policy;
use super::Valuations;
use crate::error::{CpalError, Result};
use crate::tree::{RawTree, ReducedTree};

/// Averaging factor schedule indexed by the global step `k = 0, 1, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", content = "param", rename_all = "lowercase")]
pub enum StepRule {
    /// `α_k = 1 / (k + 1)`.
    Harmonic,
    /// Fixed `α ∈ (0, 1)`.
    Constant(f64),
    /// `α_k = (k + 1)^(-γ)` with `0.5 < γ ≤ 1`.
    Power(f64),
}

impl StepRule {
    pub fn alpha(&self, k: u64) -> f64 {
        match *self {
            StepRule::Harmonic => 1.0 / (k as f64 + 1.0),
            StepRule::Constant(a) => a,
            StepRule::Power(g) => (k as f64 + 1.0).powf(-g),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepRule::Harmonic => Ok(()),
            StepRule::Constant(a) if a > 0.0 && a < 1.0 => Ok(()),
            StepRule::Constant(a) => Err(CpalError::validation(format!(
                "constant step {a} must lie in (0, 1)"
            ))),
            StepRule::Power(g) if g > 0.5 && g <= 1.0 => Ok(()),
            StepRule::Power(g) => Err(CpalError::validation(format!(
                "power exponent {g} must lie in (0.5, 1]"
            ))),
        }
    }
}

/// Where observed payoffs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The reduced tree's expected class payoff.
    Reduced,
    /// A raw state drawn conditional on the reduced state, then a uniformly
    /// drawn alternative of the chosen class.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub beta: f64,
    pub horizon: u64,
    pub step_rule: StepRule,
    pub seed: u64,
    pub record_every: u64,
    pub mode: Mode,
    /// Independent RNG stream for this trajectory.
    pub stream: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            beta: 1.0,
            horizon: 10_000,
            step_rule: StepRule::Harmonic,
            seed: 0,
            record_every: 1,
            mode: Mode::Reduced,
            stream: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || self.beta.is_nan() {
            return Err(CpalError::validation(format!("beta {} must be >= 0", self.beta)));
        }
        if self.record_every == 0 {
            return Err(CpalError::validation("record stride must be >= 1"));
        }
        self.step_rule.validate()
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One realised update: step index, reduced state, chosen class, observed
/// payoff and averaging factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub k: u64,
    pub state: usize,
    pub chosen: usize,
    pub payoff: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Valuations>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Valuations> {
        self.snapshots.last()
    }
}

// Per reduced state: the raw states merged into it and, per member class,
// the payoffs of that class's alternatives in each raw state.
#[derive(Debug, Clone)]
struct RawSlot {
    pick: WeightedIndex<f64>,
    payoffs: Vec<Vec<Vec<f64>>>,
}

/// Payoff sampler for raw mode.
#[derive(Debug, Clone)]
pub struct PayoffModel {
    slots: Vec<RawSlot>,
}

impl PayoffModel {
    /// `tree` must have the same class order and state class-sets as the
    /// reduction of `raw`.
    pub fn new(raw: &RawTree, tree: &ReducedTree) -> Result<Self> {
        if raw.classes() != tree.classes() {
            return Err(CpalError::validation("raw and reduced trees declare different classes"));
        }
        let mut slots = Vec::with_capacity(tree.states().len());
        for st in tree.states() {
            let ks: Vec<usize> = (0..raw.states().len())
                .filter(|&k| raw.state_mask(k) == st.mask())
                .collect();
            if ks.is_empty() {
                return Err(CpalError::validation(
                    "reduced state has no matching raw state",
                ));
            }
            let weights: Vec<f64> = ks.iter().map(|&k| raw.states()[k].prob.value()).collect();
            let pick = WeightedIndex::new(&weights)
                .map_err(|e| CpalError::validation(e.to_string()))?;
            let payoffs = ks
                .iter()
                .map(|&k| {
                    st.members()
                        .iter()
                        .map(|&c| {
                            raw.states()[k]
                                .alternatives
                                .iter()
                                .filter(|a| raw.class_of(&a.class) == Some(c))
                                .map(|a| a.payoff)
                                .collect()
                        })
                        .collect()
                })
                .collect();
            slots.push(RawSlot { pick, payoffs });
        }
        Ok(PayoffModel { slots })
    }

    fn sample<R: Rng + ?Sized>(&self, state: usize, pos: usize, rng: &mut R) -> f64 {
        let slot = &self.slots[state];
        let alts = &slot.payoffs[slot.pick.sample(rng)][pos];
        alts[rng.gen_range(0..alts.len())]
    }
}

/// A configured discrete learning process on one tree.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    tree: &'a ReducedTree,
    cfg: SimConfig,
    states: WeightedIndex<f64>,
    payoffs: Option<PayoffModel>,
}

impl<'a> Simulator<'a> {
    pub fn new(tree: &'a ReducedTree, cfg: SimConfig, raw: Option<&RawTree>) -> Result<Self> {
        cfg.validate()?;
        let weights: Vec<f64> = tree.states().iter().map(|s| s.prob()).collect();
        let states =
            WeightedIndex::new(&weights).map_err(|e| CpalError::validation(e.to_string()))?;
        let payoffs = match (cfg.mode, raw) {
            (Mode::Reduced, _) => None,
            (Mode::Raw, Some(raw)) => Some(PayoffModel::new(raw, tree)?),
            (Mode::Raw, None) => {
                return Err(CpalError::validation("raw mode needs the raw tree"));
            }
        };
        Ok(Simulator { tree, cfg, states, payoffs })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Draws a state and a class, observes a payoff and moves the chosen
    /// class's valuation toward it. Other entries are left untouched.
    pub fn step<R: Rng + ?Sized>(&self, v: &mut [f64], k: u64, rng: &mut R) -> Event {
        let state = self.states.sample(rng);
        let st = &self.tree.states()[state];
        let mut sigma = [0.0; 64];
        let sigma = &mut sigma[..st.len()];
        state_policy(v, st, self.cfg.beta, sigma);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pos = st.len() - 1;
        for (i, &x) in sigma.iter().enumerate() {
            acc += x;
            if u < acc {
                pos = i;
                break;
            }
        }
        // Skip zero-probability tail entries left by rounding.
        while sigma[pos] == 0.0 && pos > 0 {
            pos -= 1;
        }
        let chosen = st.members()[pos];
        let payoff = match &self.payoffs {
            Some(model) => model.sample(state, pos, rng),
            None => st.payoffs()[pos],
        };
        let alpha = self.cfg.step_rule.alpha(k);
        v[chosen] = (1.0 - alpha) * v[chosen] + alpha * payoff;
        Event { k, state, chosen, payoff, alpha }
    }

    /// Runs `cfg.horizon` steps from `v0` on the configured RNG stream.
    pub fn run(&self, v0: &[f64]) -> Trajectory {
        let mut rng = self.cfg.rng();
        let mut v = v0.to_vec();
        let stride = self.cfg.record_every;
        let mut traj = Trajectory {
            times: vec![0.0],
            snapshots: vec![Valuations::from(v0)],
            events: Vec::new(),
        };
        for k in 0..self.cfg.horizon {
            let e = self.step(&mut v, k, &mut rng);
            if k % stride == 0 {
                traj.events.push(e);
            }
            let done = k + 1;
            if done % stride == 0 || done == self.cfg.horizon {
                traj.times.push(done as f64);
                traj.snapshots.push(Valuations::from(v.as_slice()));
            }
        }
        traj
    }

    /// Terminal valuation only, without recording.
    pub fn run_terminal(&self, v0: &[f64]) -> Valuations {
        let mut rng = self.cfg.rng();
        let mut v = v0.to_vec();
        for k in 0..self.cfg.horizon {
            self.step(&mut v, k, &mut rng);
        }
        Valuations(v)
    }

    /// Terminal valuations of `runs` independent trajectories, one RNG
    /// stream per trajectory index. The result does not depend on the
    /// thread count.
    pub fn terminal_batch(&self, v0: &[f64], runs: u64) -> Vec<Valuations> {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let mut sim = self.clone();
                sim.cfg.stream = i;
                sim.run_terminal(v0)
            })
            .collect()
    }
}

/// One step of the process from `v` at global step `k`.
pub fn step<R: Rng + ?Sized>(
    v: &[f64],
    k: u64,
    cfg: &SimConfig,
    t: &ReducedTree,
    rng: &mut R,
) -> Result<(Valuations, Event)> {
    let sim = Simulator::new(t, cfg.clone(), None)?;
    let mut next = v.to_vec();
    let e = sim.step(&mut next, k, rng);
    Ok((Valuations(next), e))
}

/// Runs the process in reduced mode.
pub fn simulate(v0: &[f64], cfg: &SimConfig, t: &ReducedTree) -> Result<Trajectory> {
    Ok(Simulator::new(t, cfg.clone(), None)?.run(v0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::tree::reduce;

    fn cfg(beta: f64, horizon: u64, seed: u64) -> SimConfig {
        SimConfig { beta, horizon, seed, ..SimConfig::default() }
    }

    #[test]
    fn full_replacement_at_alpha_one() {
        let t = fixtures::multiplicity_tree();
        let mut rng = cfg(1.0, 1, 0).rng();
        let (v, e) = step(&[7.0, -4.0], 0, &cfg(1.0, 1, 0), &t, &mut rng).unwrap();
        assert_eq!(e.alpha, 1.0);
        assert_eq!(v[e.chosen], e.payoff);
    }

    #[test]
    fn unary_state_touches_only_its_class() {
        let t = fixtures::unique_pure_tree();
        let c = cfg(2.0, 1, 0);
        let sim = Simulator::new(&t, c.clone(), None).unwrap();
        let mut rng = c.rng();
        let v0 = [0.3, 0.7];
        for k in 0..200 {
            let mut v = v0;
            let e = sim.step(&mut v, k, &mut rng);
            let other = 1 - e.chosen;
            assert_eq!(v[other].to_bits(), v0[other].to_bits());
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let t = fixtures::multiplicity_tree();
        let a = simulate(&[0.0, 0.0], &cfg(3.0, 500, 11), &t).unwrap();
        let b = simulate(&[0.0, 0.0], &cfg(3.0, 500, 11), &t).unwrap();
        assert_eq!(a, b);
        let c = simulate(&[0.0, 0.0], &cfg(3.0, 500, 12), &t).unwrap();
        assert_ne!(a.snapshots, c.snapshots);
    }

    #[test]
    fn zero_horizon_keeps_only_start() {
        let t = fixtures::multiplicity_tree();
        let tr = simulate(&[0.5, 0.5], &cfg(1.0, 0, 0), &t).unwrap();
        assert_eq!(tr.times, vec![0.0]);
        assert_eq!(tr.snapshots, vec![Valuations(vec![0.5, 0.5])]);
        assert!(tr.events.is_empty());
    }

    #[test]
    fn stride_limits_recording() {
        let t = fixtures::multiplicity_tree();
        let mut c = cfg(1.0, 1000, 0);
        c.record_every = 100;
        let tr = simulate(&[0.0, 0.0], &c, &t).unwrap();
        assert_eq!(tr.snapshots.len(), 11);
        assert_eq!(tr.events.len(), 10);
        assert_eq!(*tr.times.last().unwrap(), 1000.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let t = fixtures::multiplicity_tree();
        let mut c = cfg(1.0, 10, 0);
        c.step_rule = StepRule::Constant(1.0);
        assert!(simulate(&[0.0, 0.0], &c, &t).is_err());
        c.step_rule = StepRule::Power(0.5);
        assert!(simulate(&[0.0, 0.0], &c, &t).is_err());
        c.step_rule = StepRule::Harmonic;
        c.record_every = 0;
        assert!(simulate(&[0.0, 0.0], &c, &t).is_err());
    }

    #[test]
    fn raw_mode_draws_raw_payoffs() {
        let raw = fixtures::bob_raw();
        let t = reduce(&raw).unwrap();
        let mut c = cfg(0.0, 1, 0);
        c.mode = Mode::Raw;
        let sim = Simulator::new(&t, c.clone(), Some(&raw)).unwrap();
        let mut rng = c.rng();
        let mut seen = std::collections::BTreeSet::new();
        for k in 0..2000 {
            let mut v = [0.0, 0.0];
            let e = sim.step(&mut v, k, &mut rng);
            seen.insert((e.state, e.chosen, e.payoff as i64));
        }
        // citrus in {apples, citrus}: limes 2 from psi1, lemons 4 from psi3.
        assert!(seen.contains(&(0, 1, 2)) && seen.contains(&(0, 1, 4)));
        // citrus alone: lemons 3 or limes 1.
        assert!(seen.contains(&(1, 1, 3)) && seen.contains(&(1, 1, 1)));
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn batch_is_independent_of_thread_count() {
        let t = fixtures::unique_mixed_tree();
        let sim = Simulator::new(&t, cfg(5.0, 2000, 3), None).unwrap();
        let a = sim.terminal_batch(&[0.0, 0.0], 8);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sim.terminal_batch(&[0.0, 0.0], 8));
        assert_eq!(a, b);
    }
}
