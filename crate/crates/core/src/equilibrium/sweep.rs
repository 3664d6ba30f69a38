use serde::Serialize;

use super::solve::{solve_with, SolverConfig};
use super::Equilibrium;
use crate::dynamics::sup_dist;
use crate::error::{CpalError, Result};
use crate::tree::ReducedTree;

/// Why a continuation path stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    SolverFailed { beta: f64, message: String },
    Jump { beta: f64, step: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationPath {
    pub points: Vec<Equilibrium>,
    pub termination: Termination,
}

impl ContinuationPath {
    pub fn last(&self) -> Option<&Equilibrium> {
        self.points.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub solver: SolverConfig,
    /// A step longer than this multiple of the trailing median ends the path.
    pub jump_factor: f64,
    /// Number of trailing steps in the median.
    pub window: usize,
    /// Minimum number of previous steps before jumps are checked.
    pub min_history: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            solver: SolverConfig::default(),
            jump_factor: 10.0,
            window: 5,
            min_history: 3,
        }
    }
}

/// `start, start·ratio, ...` up to and including `end`.
pub fn geometric_schedule(start: f64, end: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && end >= start && ratio > 1.0) {
        return Err(CpalError::validation("schedule needs 0 < start <= end and ratio > 1"));
    }
    let mut out = vec![start];
    let mut b = start;
    while b * ratio < end * (1.0 - 1e-12) {
        b *= ratio;
        out.push(b);
    }
    if *out.last().expect("non-empty") < end {
        out.push(end);
    }
    Ok(out)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Follows each seed along `betas`, warm-starting every solve from the
/// previous solution.
///
/// A path ends early if a solve fails or if a step exceeds `jump_factor`
/// times the median of the trailing steps (with a floor of `1e-6` of the
/// payoff range, so that paths which have numerically stopped moving are not
/// cut on round-off).
pub fn beta_sweep(
    t: &ReducedTree,
    betas: &[f64],
    seeds: &[Vec<f64>],
    cfg: &SweepConfig,
) -> Result<Vec<ContinuationPath>> {
    if betas.is_empty() {
        return Err(CpalError::validation("empty beta schedule"));
    }
    if betas.windows(2).any(|w| !(w[1] > w[0])) || betas[0] < 0.0 {
        return Err(CpalError::validation("beta schedule must be non-negative and strictly increasing"));
    }
    let (lo, hi) = t.payoff_range();
    let floor = 1e-6 * (hi - lo).max(1e-6);
    let paths = seeds
        .iter()
        .map(|seed| {
            let mut points: Vec<Equilibrium> = Vec::new();
            let mut steps: Vec<f64> = Vec::new();
            let mut v = seed.clone();
            for &beta in betas {
                let e = match solve_with(&v, t, beta, &cfg.solver) {
                    Ok(e) => e,
                    Err(err) => {
                        return ContinuationPath {
                            points,
                            termination: Termination::SolverFailed { beta, message: err.to_string() },
                        }
                    }
                };
                if let Some(prev) = points.last() {
                    let step = sup_dist(&prev.v_star, &e.v_star);
                    if steps.len() >= cfg.min_history {
                        let tail = steps[steps.len().saturating_sub(cfg.window)..].to_vec();
                        let bound = (cfg.jump_factor * median(tail)).max(floor);
                        if step > bound {
                            return ContinuationPath {
                                points,
                                termination: Termination::Jump { beta, step, bound },
                            };
                        }
                    }
                    steps.push(step);
                }
                v = e.v_star.to_vec();
                points.push(e);
            }
            ContinuationPath { points, termination: Termination::Completed }
        })
        .collect();
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn schedule_is_geometric() {
        let b = geometric_schedule(1.0, 10.0, 1.5).unwrap();
        assert_eq!(b.first(), Some(&1.0));
        assert_eq!(b.last(), Some(&10.0));
        assert!(b.windows(2).all(|w| w[1] > w[0] && w[1] / w[0] <= 1.5 + 1e-12));
        assert!(geometric_schedule(1.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn mixed_path_approaches_limit() {
        let t = fixtures::unique_mixed_tree();
        let betas = geometric_schedule(1.0, 1e4, 1.5).unwrap();
        let paths = beta_sweep(&t, &betas, &[vec![2.5, 2.5]], &SweepConfig::default()).unwrap();
        let p = &paths[0];
        assert_eq!(p.termination, Termination::Completed);
        let x = 2.0 + 1.0 / 3f64.sqrt();
        assert!(p.last().unwrap().v_star.dist(&[x, x]) < 1e-3);
    }

    #[test]
    fn pure_path_is_flat() {
        let t = fixtures::multiplicity_tree();
        let betas = geometric_schedule(50.0, 1e4, 1.5).unwrap();
        let paths = beta_sweep(&t, &betas, &[vec![1.0, 0.0]], &SweepConfig::default()).unwrap();
        assert_eq!(paths[0].termination, Termination::Completed);
        assert!(paths[0].last().unwrap().v_star.dist(&[1.0, 0.0]) < 1e-12);
    }

    #[test]
    fn rejects_unsorted_schedule() {
        let t = fixtures::multiplicity_tree();
        assert!(beta_sweep(&t, &[2.0, 1.0], &[vec![0.0, 0.0]], &SweepConfig::default()).is_err());
    }
}
