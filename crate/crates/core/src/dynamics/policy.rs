use serde::Serialize;

use crate::tree::{ReducedState, ReducedTree};

/// Logit choice probabilities at every state, aligned with each state's
/// member classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Policy {
    pub per_state: Vec<Vec<f64>>,
}

impl Policy {
    /// Probability of choosing class `s` at state `k` (zero if not offered).
    pub fn prob(&self, tree: &ReducedTree, k: usize, s: usize) -> f64 {
        tree.states()[k].position(s).map_or(0.0, |i| self.per_state[k][i])
    }
}

/// Softmax of `beta * v` over the classes offered at `st`, written into
/// `out`. An infinite `beta` splits mass equally over the exact argmax set.
pub fn state_policy(v: &[f64], st: &ReducedState, beta: f64, out: &mut [f64]) {
    let members = st.members();
    if beta == 0.0 {
        out.fill(1.0 / members.len() as f64);
        return;
    }
    let vmax = members.iter().map(|&c| v[c]).fold(f64::NEG_INFINITY, f64::max);
    if beta.is_infinite() {
        let ties = members.iter().filter(|&&c| v[c] == vmax).count() as f64;
        for (o, &c) in out.iter_mut().zip(members) {
            *o = if v[c] == vmax { 1.0 / ties } else { 0.0 };
        }
        return;
    }
    let mut total = 0.0;
    for (o, &c) in out.iter_mut().zip(members) {
        *o = (beta * (v[c] - vmax)).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn policy(v: &[f64], t: &ReducedTree, beta: f64) -> Policy {
    let per_state = t
        .states()
        .iter()
        .map(|st| {
            let mut out = vec![0.0; st.len()];
            state_policy(v, st, beta, &mut out);
            out
        })
        .collect();
    Policy { per_state }
}

// log Σ_j exp(beta v_j) over each state's members.
fn log_partitions(v: &[f64], t: &ReducedTree, beta: f64) -> Vec<f64> {
    t.states()
        .iter()
        .map(|st| {
            let m = st.members().iter().map(|&c| beta * v[c]).fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = st.members().iter().map(|&c| (beta * v[c] - m).exp()).sum();
            m + sum.ln()
        })
        .collect()
}

/// Normalised weights `p(ω) σ^s_ω / Σ p σ^s` over the states offering `s`,
/// in the order of `t.incidence(s)`. Computed in the log domain so that
/// heavily dominated classes do not underflow to an empty denominator.
pub(crate) fn class_weights(v: &[f64], t: &ReducedTree, beta: f64, s: usize, logz: &[f64]) -> Vec<f64> {
    let inc = t.incidence(s);
    let lw: Vec<f64> = inc
        .iter()
        .map(|&(k, _)| t.states()[k].prob().ln() + beta * v[s] - logz[k])
        .collect();
    let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|x| (x - m).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub(crate) fn finite_logz(v: &[f64], t: &ReducedTree, beta: f64) -> Vec<f64> {
    log_partitions(v, t, beta)
}

/// `g_s(v)`: the expected payoff of class `s` conditional on it being
/// chosen, under the logit policy at sensitivity `beta`.
///
/// With an infinite `beta` a class that is never an argmax keeps `g_s = v_s`.
pub fn g_map(v: &[f64], t: &ReducedTree, beta: f64) -> Vec<f64> {
    let n = t.n_classes();
    if beta.is_infinite() {
        let pol = policy(v, t, beta);
        return (0..n)
            .map(|s| {
                let (num, den) = t.incidence(s).iter().fold((0.0, 0.0), |(a, b), &(k, i)| {
                    let w = t.states()[k].prob() * pol.per_state[k][i];
                    (a + w * t.states()[k].payoffs()[i], b + w)
                });
                if den > 0.0 {
                    num / den
                } else {
                    v[s]
                }
            })
            .collect();
    }
    let logz = log_partitions(v, t, beta);
    (0..n)
        .map(|s| {
            let w = class_weights(v, t, beta, s, &logz);
            t.incidence(s)
                .iter()
                .zip(&w)
                .map(|(&(k, i), w)| w * t.states()[k].payoffs()[i])
                .sum()
        })
        .collect()
}

/// Right-hand side of the mean-field ODE, `g(v) - v`.
pub fn mean_field_rhs(v: &[f64], t: &ReducedTree, beta: f64) -> Vec<f64> {
    g_map(v, t, beta).into_iter().zip(v).map(|(g, x)| g - x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_beta_is_uniform() {
        let t = fixtures::uniform_three_class(&[0.0; 3], &[0.0; 6], &[0.0; 3]);
        let p = policy(&[5.0, -1.0, 2.0], &t, 0.0);
        for (k, st) in t.states().iter().enumerate() {
            for &x in &p.per_state[k] {
                assert_eq!(x, 1.0 / st.len() as f64);
            }
        }
    }

    #[test]
    fn equal_valuations_split_evenly() {
        let t = fixtures::unique_mixed_tree();
        let x = 2.0 + 1.0 / 3f64.sqrt();
        for beta in [0.5, 50.0, 1e6, f64::INFINITY] {
            let p = policy(&[x, x], &t, beta);
            assert_eq!(p.per_state[0], vec![0.5, 0.5]);
        }
    }

    #[test]
    fn large_beta_binary_state() {
        let t = fixtures::multiplicity_tree();
        let p = policy(&[1.0, 0.0], &t, 50.0);
        let expected = 1.0 / (1.0 + (-50.0f64).exp());
        assert!((p.per_state[0][0] - expected).abs() < 1e-15);
        // 1 - σ_L = e^-50 / (1 + e^-50) ≈ 1.93e-22
        assert!((p.per_state[0][1] - 1.9287498479639178e-22).abs() < 1e-35);
    }

    #[test]
    fn infinite_beta_takes_argmax() {
        let t = fixtures::uniform_three_class(&[0.0; 3], &[0.0; 6], &[0.0; 3]);
        let p = policy(&[1.0, 3.0, 3.0], &t, f64::INFINITY);
        assert_eq!(p.per_state[6], vec![0.0, 0.5, 0.5]);
        assert_eq!(p.per_state[3], vec![0.0, 1.0]);
    }

    #[test]
    fn uniform_policy_g_values() {
        // β = 0 on the multiplicity tree:
        // g_L = (1/3·1/2·2 + 1/3·0) / (1/3·1/2 + 1/3) = 2/3, g_R = 1/3.
        let t = fixtures::multiplicity_tree();
        let g = g_map(&[7.0, -3.0], &t, 0.0);
        assert!((g[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pure_state_is_steady_at_large_beta() {
        let t = fixtures::multiplicity_tree();
        let r = mean_field_rhs(&[0.0, 0.5], &t, 50.0);
        assert!(r.iter().all(|x| x.abs() < 1e-6), "{r:?}");
    }

    // Naive summation straight from the definition, without log-domain
    // normalisation.
    fn naive_g(v: &[f64], t: &ReducedTree, beta: f64) -> Vec<f64> {
        let n = t.n_classes();
        let mut num = vec![0.0; n];
        let mut den = vec![0.0; n];
        for st in t.states() {
            let z: f64 = st.members().iter().map(|&c| (beta * v[c]).exp()).sum();
            for (&c, &pay) in st.members().iter().zip(st.payoffs()) {
                let sigma = (beta * v[c]).exp() / z;
                num[c] += st.prob() * sigma * pay;
                den[c] += st.prob() * sigma;
            }
        }
        num.iter().zip(&den).map(|(a, b)| a / b).collect()
    }

    #[test]
    fn g_matches_naive_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            for _ in 0..20 {
                let t = fixtures::random_full_support(&mut rng, n);
                let v: Vec<f64> = (0..n).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
                let beta = rand::Rng::gen_range(&mut rng, 0.0..20.0);
                let a = g_map(&v, &t, beta);
                let b = naive_g(&v, &t, beta);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-12, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn dominated_class_does_not_underflow() {
        let t = fixtures::multiplicity_tree();
        let g = g_map(&[50.0, 0.0], &t, 1e3);
        assert!(g.iter().all(|x| x.is_finite()));
        assert_eq!(g[1], 0.0);
    }

    proptest! {
        #[test]
        fn policy_rows_sum_to_one(
            seed in 0u64..1000,
            beta in prop_oneof![Just(0.0), 0.0f64..1e6],
            scale in 0.0f64..1e3,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = fixtures::random_full_support(&mut rng, 3);
            let v: Vec<f64> = (0..3).map(|_| scale * rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let p = policy(&v, &t, beta);
            for row in &p.per_state {
                let s: f64 = row.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|&x| x >= 0.0));
            }
        }

        #[test]
        fn policy_is_translation_invariant(
            seed in 0u64..1000,
            beta in 0.0f64..100.0,
            c in -50.0f64..50.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = fixtures::random_full_support(&mut rng, 3);
            let v: Vec<f64> = (0..3).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
            let w: Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = policy(&v, &t, beta);
            let b = policy(&w, &t, beta);
            for (ra, rb) in a.per_state.iter().zip(&b.per_state) {
                for (x, y) in ra.iter().zip(rb) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn g_stays_in_payoff_box(seed in 0u64..1000, beta in 0.0f64..200.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = fixtures::random_low_order(&mut rng, 3);
            let bx = t.payoff_box();
            let v: Vec<f64> = (0..3).map(|_| rand::Rng::gen_range(&mut rng, -5.0..5.0)).collect();
            let g = g_map(&v, &t, beta);
            prop_assert!(bx.contains(&g, 1e-12));
        }
    }
}
