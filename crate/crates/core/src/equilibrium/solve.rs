use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{classify, effective_tie_tolerance, tie_tolerance, Equilibrium};
use crate::dynamics::{mean_field_rhs, sup_dist, sup_norm, Valuations};
use crate::error::{CpalError, Result};
use crate::stability::jacobian;
use crate::tree::{PayoffBox, ReducedTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Tie tolerance for classification; defaults to `1e-6` of the payoff
    /// range.
    pub eps_tie: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-12,
            max_iter: 100_000,
            eps_tie: None,
        }
    }
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

// Largest λ ∈ (0, 1] keeping v + λ d inside the box.
fn max_step(v: &[f64], d: &[f64], bx: &PayoffBox) -> f64 {
    let mut lam: f64 = 1.0;
    for s in 0..v.len() {
        if d[s] > 0.0 {
            lam = lam.min((bx.hi[s] - v[s]) / d[s]);
        } else if d[s] < 0.0 {
            lam = lam.min((bx.lo[s] - v[s]) / d[s]);
        }
    }
    lam.max(0.0)
}

fn newton_direction(v: &[f64], f: &[f64], t: &ReducedTree, beta: f64) -> Option<Vec<f64>> {
    let j = jacobian(v, t, beta).ok()?.matrix;
    let rhs = -DVector::from_column_slice(f);
    let d = DMatrix::lu(j).solve(&rhs)?;
    d.iter().all(|x| x.is_finite()).then(|| d.iter().copied().collect())
}

/// Fixed point of `g` near `v0` with the default configuration and the given
/// residual tolerance.
pub fn solve_fixed_point(v0: &[f64], t: &ReducedTree, beta: f64, tol: f64) -> Result<Equilibrium> {
    solve_with(v0, t, beta, &SolverConfig { tol, ..SolverConfig::default() })
}

/// Globalised Newton iteration on `F(v) = g(v) - v`.
///
/// Iterates stay in the payoff box inflated by 10%. A Newton step is clipped
/// to that box and backtracked on `|F|_2`; if the Jacobian is singular or no
/// backtracked step decreases the merit, a damped step `v + F/2` is taken.
pub fn solve_with(v0: &[f64], t: &ReducedTree, beta: f64, cfg: &SolverConfig) -> Result<Equilibrium> {
    let n = t.n_classes();
    if v0.len() != n || v0.iter().any(|x| !x.is_finite()) {
        return Err(CpalError::validation("start must be finite, one entry per class"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(CpalError::validation(format!("beta {beta} must be finite and >= 0")));
    }
    if !(cfg.tol > 0.0) {
        return Err(CpalError::validation("tolerance must be positive"));
    }
    let bx = t.payoff_box().inflated(0.1);
    let mut v: Vec<f64> = (0..n).map(|s| v0[s].clamp(bx.lo[s], bx.hi[s])).collect();
    let mut f = mean_field_rhs(&v, t, beta);
    let mut best = (sup_norm(&f), v.clone());
    for iter in 0..=cfg.max_iter {
        let r = sup_norm(&f);
        if !r.is_finite() {
            return Err(CpalError::Numeric(format!("non-finite residual at {v:?}")));
        }
        if r < best.0 {
            best = (r, v.clone());
        }
        if r < cfg.tol {
            return Ok(finish(v, r, iter, t, beta, cfg));
        }
        if iter == cfg.max_iter {
            break;
        }
        let merit = l2(&f);
        let mut accepted = false;
        if let Some(d) = newton_direction(&v, &f, t, beta) {
            let mut lam = max_step(&v, &d, &bx);
            for _ in 0..30 {
                if lam <= 0.0 {
                    break;
                }
                let trial: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + lam * b).collect();
                let ft = mean_field_rhs(&trial, t, beta);
                if l2(&ft) < (1.0 - 1e-4 * lam) * merit || sup_norm(&ft) < cfg.tol {
                    v = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
        }
        if !accepted {
            for s in 0..n {
                v[s] = (v[s] + 0.5 * f[s]).clamp(bx.lo[s], bx.hi[s]);
            }
            f = mean_field_rhs(&v, t, beta);
        }
    }
    Err(CpalError::NoConvergence {
        iterations: cfg.max_iter,
        residual: best.0,
        best: Valuations(best.1),
    })
}

fn finish(v: Vec<f64>, residual: f64, iterations: usize, t: &ReducedTree, beta: f64, cfg: &SolverConfig) -> Equilibrium {
    let eps = effective_tie_tolerance(beta, cfg.eps_tie.unwrap_or_else(|| tie_tolerance(t)));
    let (classification, indifference_groups, limit_policy) = classify(&v, t, eps);
    Equilibrium {
        beta,
        v_star: Valuations(v),
        residual,
        classification,
        indifference_groups,
        limit_policy,
        iterations,
    }
}

/// Starting points for [`find_all`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiStart {
    /// Seeded random interior points.
    pub m: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    /// Sup-norm distance under which two solutions are the same.
    pub dedup: f64,
}

impl Default for MultiStart {
    fn default() -> Self {
        MultiStart {
            m: 64,
            seed: 0,
            solver: SolverConfig { max_iter: 2_000, ..SolverConfig::default() },
            dedup: 1e-6,
        }
    }
}

impl MultiStart {
    /// Box vertices (up to ten classes), the box centre, `m` random interior
    /// points, and points on the tie planes `v_i = v_j (± 2/beta)` through the
    /// centre plus the all-equal point. Unstable mixed equilibria sit near
    /// tie planes and are easy to miss from generic starts.
    pub fn starts(&self, t: &ReducedTree, beta: f64) -> Vec<Vec<f64>> {
        let bx = t.payoff_box();
        let n = t.n_classes();
        let center = bx.center();
        let mut out = Vec::new();
        if n <= 10 {
            for mask in 0..(1usize << n) {
                out.push((0..n).map(|s| if mask >> s & 1 == 1 { bx.hi[s] } else { bx.lo[s] }).collect());
            }
        }
        out.push(center.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.m {
            out.push((0..n).map(|s| bx.lo[s] + rng.gen::<f64>() * (bx.hi[s] - bx.lo[s])).collect());
        }
        let offsets: Vec<f64> = if beta > 0.0 { vec![0.0, 2.0 / beta, -2.0 / beta] } else { vec![0.0] };
        for i in 0..n {
            for j in i + 1..n {
                let mid = 0.5 * (center[i] + center[j]);
                for &o in &offsets {
                    let mut p = center.clone();
                    p[i] = mid + 0.5 * o;
                    p[j] = mid - 0.5 * o;
                    out.push(p);
                }
            }
        }
        let mean = center.iter().sum::<f64>() / n as f64;
        out.push(vec![mean; n]);
        out
    }
}

/// All equilibria reachable from the multistart set, deduplicated and sorted
/// lexicographically by valuation.
pub fn find_all(t: &ReducedTree, beta: f64, ms: &MultiStart) -> Result<Vec<Equilibrium>> {
    let starts = ms.starts(t, beta);
    let results: Vec<Result<Equilibrium>> = starts
        .par_iter()
        .map(|v0| solve_with(v0, t, beta, &ms.solver))
        .collect();
    let mut found: Vec<Equilibrium> = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(e) => {
                if let Some(prev) = found.iter_mut().find(|p| sup_dist(&p.v_star, &e.v_star) < ms.dedup) {
                    if e.residual < prev.residual {
                        *prev = e;
                    }
                } else {
                    found.push(e);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if found.is_empty() {
        return Err(first_err.unwrap_or_else(|| CpalError::Numeric("no starting points".into())));
    }
    found.sort_by(|a, b| {
        a.v_star
            .iter()
            .zip(b.v_star.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::Classification;
    use crate::fixtures;

    #[test]
    fn pure_equilibria_of_multiplicity_tree() {
        let t = fixtures::multiplicity_tree();
        let e = solve_fixed_point(&[1.2, 0.1], &t, 50.0, 1e-12).unwrap();
        assert!(e.v_star.dist(&[1.0, 0.0]) < 1e-6);
        assert!(e.residual < 1e-12);
        assert_eq!(e.classification, Classification::StrictPure);
        let e = solve_fixed_point(&[0.1, 0.6], &t, 50.0, 1e-12).unwrap();
        assert!(e.v_star.dist(&[0.0, 0.5]) < 1e-6);
    }

    #[test]
    fn unique_pure_tree() {
        let t = fixtures::unique_pure_tree();
        let e = solve_fixed_point(&[0.0, 0.0], &t, 50.0, 1e-12).unwrap();
        assert!(e.v_star.dist(&[1.5, 0.0]) < 1e-6);
    }

    #[test]
    fn three_equilibria_at_beta_50() {
        let t = fixtures::multiplicity_tree();
        let eqs = find_all(&t, 50.0, &MultiStart::default()).unwrap();
        assert_eq!(eqs.len(), 3, "{eqs:?}");
        let x = 1.0 - 1.0 / 3f64.sqrt();
        assert!(eqs[0].v_star.dist(&[0.0, 0.5]) < 0.05);
        assert!(eqs[1].v_star.dist(&[x, x]) < 0.05);
        assert_eq!(eqs[1].classification, Classification::Mixed);
        assert!(eqs[2].v_star.dist(&[1.0, 0.0]) < 0.05);
    }

    #[test]
    fn beta_zero_has_one_equilibrium() {
        let t = fixtures::multiplicity_tree();
        let eqs = find_all(&t, 0.0, &MultiStart::default()).unwrap();
        assert_eq!(eqs.len(), 1);
        assert!(eqs[0].v_star.dist(&[2.0 / 3.0, 1.0 / 3.0]) < 1e-12);
    }

    #[test]
    fn failure_carries_best_iterate() {
        let t = fixtures::unique_mixed_tree();
        let cfg = SolverConfig { tol: 1e-300, max_iter: 3, eps_tie: None };
        match solve_with(&[2.5, 2.5], &t, 50.0, &cfg) {
            Err(CpalError::NoConvergence { best, residual, iterations }) => {
                assert_eq!(iterations, 3);
                assert!(best.dist(&[2.577, 2.577]) < 0.05);
                assert!(residual < 0.1);
            }
            other => panic!("{other:?}"),
        }
    }
}
