//! Smooth valuation equilibria: fixed points of `g` at finite sensitivity,
//! their continuation in `beta`, and the combinatorial and closed-form
//! descriptions of their limits.

mod limits;
mod scalar;
mod solve;
mod sweep;

use serde::Serialize;

pub use limits::{construct_strict_pure_ve, enumerate_pure_ve, mixed_limit_solve, MixedLimit, PureVE, MAX_ENUMERATION_CLASSES};
pub use scalar::{reduce_1d, ScalarReduction, ScalarRoot};
pub use solve::{find_all, solve_fixed_point, solve_with, MultiStart, SolverConfig};
pub use sweep::{beta_sweep, geometric_schedule, ContinuationPath, SweepConfig, Termination};

use crate::dynamics::Valuations;
use crate::tree::ReducedTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    StrictPure,
    Mixed,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::StrictPure => "strict-pure",
            Classification::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub beta: f64,
    pub v_star: Valuations,
    pub residual: f64,
    pub classification: Classification,
    /// Classes grouped by near-equal valuation, each group in class order.
    pub indifference_groups: Vec<Vec<usize>>,
    /// Per state, uniform over the classes within tie tolerance of the best.
    pub limit_policy: Vec<Vec<f64>>,
    #[serde(skip)]
    pub iterations: usize,
}

/// Default tie tolerance: `1e-6` of the global payoff range.
pub fn tie_tolerance(t: &ReducedTree) -> f64 {
    let (lo, hi) = t.payoff_range();
    1e-6 * (hi - lo).max(1e-6)
}

/// Tolerance used to decide ties at sensitivity `beta`. At finite `beta` a
/// valuation gap `d` leaves the worse class chosen with odds `exp(-beta d)`,
/// so gaps below `ln(1e6)/beta` are not resolved by the policy.
pub fn effective_tie_tolerance(beta: f64, eps_tie: f64) -> f64 {
    eps_tie.max(1e6f64.ln() / beta)
}

pub(crate) fn classify(
    v: &[f64],
    t: &ReducedTree,
    eps: f64,
) -> (Classification, Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &c) in order.iter().enumerate() {
        if i > 0 && v[c] - v[order[i - 1]] <= eps {
            groups.last_mut().expect("non-empty").push(c);
        } else {
            groups.push(vec![c]);
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);

    let mut mixed = false;
    let policy = t
        .states()
        .iter()
        .map(|st| {
            let best = st.members().iter().map(|&c| v[c]).fold(f64::NEG_INFINITY, f64::max);
            let top: Vec<bool> = st.members().iter().map(|&c| best - v[c] <= eps).collect();
            let count = top.iter().filter(|&&x| x).count();
            mixed |= count > 1;
            top.iter().map(|&x| if x { 1.0 / count as f64 } else { 0.0 }).collect()
        })
        .collect();
    let class = if mixed { Classification::Mixed } else { Classification::StrictPure };
    (class, groups, policy)
}

#[derive(Serialize)]
struct EquilibriumRecord<'a> {
    beta: f64,
    v_star: &'a Valuations,
    residual: f64,
    classification: Classification,
    indifference_groups: Vec<Vec<&'a str>>,
    limit_policy: &'a [Vec<f64>],
}

fn record<'a>(e: &'a Equilibrium, t: &'a ReducedTree) -> EquilibriumRecord<'a> {
    EquilibriumRecord {
        beta: e.beta,
        v_star: &e.v_star,
        residual: e.residual,
        classification: e.classification,
        indifference_groups: e
            .indifference_groups
            .iter()
            .map(|g| g.iter().map(|&c| t.classes()[c].as_str()).collect())
            .collect(),
        limit_policy: &e.limit_policy,
    }
}

/// JSON array of equilibrium records, with classes named.
pub fn equilibria_to_json(eqs: &[Equilibrium], t: &ReducedTree) -> String {
    let recs: Vec<_> = eqs.iter().map(|e| record(e, t)).collect();
    serde_json::to_string_pretty(&recs).expect("serializable") + "\n"
}

/// JSON array of paths; each path is an object holding its records and the
/// termination reason.
pub fn paths_to_json(paths: &[ContinuationPath], t: &ReducedTree) -> String {
    #[derive(Serialize)]
    struct PathRecord<'a> {
        termination: &'a Termination,
        points: Vec<EquilibriumRecord<'a>>,
    }
    let recs: Vec<_> = paths
        .iter()
        .map(|p| PathRecord {
            termination: &p.termination,
            points: p.points.iter().map(|e| record(e, t)).collect(),
        })
        .collect();
    serde_json::to_string_pretty(&recs).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn groups_partition_classes() {
        let t = fixtures::uniform_three_class(&[0.0; 3], &[0.0; 6], &[0.0; 3]);
        let (class, groups, policy) = classify(&[0.5, 0.2, 0.5 + 1e-9], &t, 1e-6);
        assert_eq!(class, Classification::Mixed);
        assert_eq!(groups, vec![vec![0, 2], vec![1]]);
        assert_eq!(policy[6], vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn strict_order_is_pure() {
        let t = fixtures::multiplicity_tree();
        let (class, groups, policy) = classify(&[1.0, 0.0], &t, 1e-3);
        assert_eq!(class, Classification::StrictPure);
        assert_eq!(groups, vec![vec![0], vec![1]]);
        assert_eq!(policy[0], vec![1.0, 0.0]);
    }

    #[test]
    fn json_records_name_classes() {
        let t = fixtures::multiplicity_tree();
        let e = solve_fixed_point(&[1.2, 0.1], &t, 50.0, 1e-12).unwrap();
        let v: serde_json::Value = serde_json::from_str(&equilibria_to_json(&[e], &t)).unwrap();
        assert_eq!(v[0]["classification"], "strict-pure");
        assert_eq!(v[0]["indifference_groups"][0][0], "L");
        for key in ["beta", "v_star", "residual", "limit_policy"] {
            assert!(v[0].get(key).is_some());
        }
    }
}
