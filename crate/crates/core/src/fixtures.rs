//! Built-in trees and random tree generators.
//!
//! The two-class tree has a binary state `{L, R}` with payoffs 2 and 1 and
//! two unary states `{L}`, `{R}` with payoffs `z2`, `z3`; all three states
//! are equally likely. Probabilities are exact thirds.

use rand::Rng;

use crate::tree::{
    Probability, RawAlternative, RawState, RawTree, ReducedState, ReducedTree,
};

fn third() -> Probability {
    Probability::ratio(1, 3).expect("nonzero denominator")
}

/// Three binary choices among apples, lemons and limes, where lemons and
/// limes are indistinguishable ("citrus").
pub fn bob_raw() -> RawTree {
    let alt = |id: &str, class: &str, payoff| RawAlternative {
        id: id.into(),
        class: class.into(),
        payoff,
    };
    RawTree::new(
        vec!["apples".into(), "citrus".into()],
        vec![
            RawState {
                id: "psi1".into(),
                prob: third(),
                alternatives: vec![alt("apples", "apples", 3.0), alt("limes", "citrus", 2.0)],
            },
            RawState {
                id: "psi2".into(),
                prob: third(),
                alternatives: vec![alt("lemons", "citrus", 3.0), alt("limes", "citrus", 1.0)],
            },
            RawState {
                id: "psi3".into(),
                prob: third(),
                alternatives: vec![alt("lemons", "citrus", 4.0), alt("apples", "apples", 1.0)],
            },
        ],
    )
    .expect("valid fixture")
}

/// The two-class example tree with unary payoffs `z2` (for `L`) and `z3`
/// (for `R`).
pub fn two_class_tree(z2: f64, z3: f64) -> ReducedTree {
    ReducedTree::new(
        vec!["L".into(), "R".into()],
        vec![
            ReducedState::new(vec![0, 1], third(), vec![2.0, 1.0]),
            ReducedState::new(vec![0], third(), vec![z2]),
            ReducedState::new(vec![1], third(), vec![z3]),
        ],
    )
    .expect("valid fixture")
}

/// Multiple equilibria: two strict pure and one mixed.
pub fn multiplicity_tree() -> ReducedTree {
    two_class_tree(0.0, 0.0)
}

/// Large unary payoffs: a unique, globally stable mixed equilibrium.
pub fn unique_mixed_tree() -> ReducedTree {
    two_class_tree(3.0, 3.0)
}

/// A unique strict pure equilibrium at `(1.5, 0)`.
pub fn unique_pure_tree() -> ReducedTree {
    two_class_tree(1.0, 0.0)
}

/// Three classes `a, b, c` with all seven non-empty subsets equally likely.
///
/// `binary` holds payoffs for `{a,b}`, `{a,c}`, `{b,c}` in that order, two
/// entries per state in class order.
pub fn uniform_three_class(unary: &[f64], binary: &[f64], ternary: &[f64]) -> ReducedTree {
    let p = || Probability::ratio(1, 7).expect("nonzero denominator");
    let mut states = Vec::with_capacity(7);
    for s in 0..3 {
        states.push(ReducedState::new(vec![s], p(), vec![unary[s]]));
    }
    for (i, pair) in [[0, 1], [0, 2], [1, 2]].iter().enumerate() {
        states.push(ReducedState::new(
            pair.to_vec(),
            p(),
            vec![binary[2 * i], binary[2 * i + 1]],
        ));
    }
    states.push(ReducedState::new(vec![0, 1, 2], p(), ternary.to_vec()));
    ReducedTree::new(vec!["a".into(), "b".into(), "c".into()], states).expect("valid fixture")
}

/// Class names `c0, c1, ...`.
pub fn class_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// Random tree whose support is every non-empty subset of `n` classes.
/// Probabilities are proportional to uniform draws on `[0.5, 1.5]`; payoffs
/// are uniform on `[0, 1]`.
pub fn random_full_support<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ReducedTree {
    let masks: Vec<u64> = (1..(1u64 << n)).collect();
    random_on_masks(rng, n, &masks)
}

/// Random tree supported on every unary and binary subset of `n` classes
/// (plus the full set when `n > 2`).
pub fn random_low_order<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ReducedTree {
    let mut masks: Vec<u64> = (1..(1u64 << n)).filter(|m| m.count_ones() <= 2).collect();
    if n > 2 {
        masks.push((1u64 << n) - 1);
    }
    random_on_masks(rng, n, &masks)
}

/// Random two-class tree with states `{i}`, `{j}`, `{i,j}`.
pub fn random_two_class<R: Rng + ?Sized>(rng: &mut R) -> ReducedTree {
    random_on_masks(rng, 2, &[0b11, 0b01, 0b10])
}

/// Random tree on uniform probabilities over all `2^n - 1` subsets.
pub fn random_uniform_support<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ReducedTree {
    let count = (1u64 << n) - 1;
    let states = (1..=count)
        .map(|mask| {
            let members: Vec<usize> = (0..n).filter(|&c| mask & (1 << c) != 0).collect();
            let payoffs = members.iter().map(|_| rng.gen::<f64>()).collect();
            ReducedState::new(
                members,
                Probability::ratio(1, count as i64).expect("nonzero"),
                payoffs,
            )
        })
        .collect();
    ReducedTree::new(class_names(n), states).expect("valid random tree")
}

fn random_on_masks<R: Rng + ?Sized>(rng: &mut R, n: usize, masks: &[u64]) -> ReducedTree {
    let weights: Vec<f64> = masks.iter().map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // Put the rounding residue on the largest state so the sum is 1 to
    // within an ulp or two.
    let residue = 1.0 - probs.iter().sum::<f64>();
    let imax = (0..probs.len())
        .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
        .expect("non-empty");
    probs[imax] += residue;
    let states = masks
        .iter()
        .zip(probs)
        .map(|(&mask, p)| {
            let members: Vec<usize> = (0..n).filter(|&c| mask & (1 << c) != 0).collect();
            let payoffs = members.iter().map(|_| rng.gen::<f64>()).collect();
            ReducedState::new(members, Probability::new(p), payoffs)
        })
        .collect();
    ReducedTree::new(class_names(n), states).expect("valid random tree")
}

/// Random raw tree with `n_states` states over `n_classes` classes, each
/// state offering between one and four alternatives.
pub fn random_raw<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_classes: usize) -> RawTree {
    let classes = class_names(n_classes);
    loop {
        let weights: Vec<f64> = (0..n_states).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = weights.iter().sum();
        let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let residue = 1.0 - probs.iter().sum::<f64>();
        probs[0] += residue;
        let states: Vec<RawState> = probs
            .into_iter()
            .enumerate()
            .map(|(k, p)| {
                let m = rng.gen_range(1..=4);
                let alternatives = (0..m)
                    .map(|a| RawAlternative {
                        id: format!("s{k}a{a}"),
                        class: classes[rng.gen_range(0..n_classes)].clone(),
                        payoff: rng.gen_range(-2.0..5.0),
                    })
                    .collect();
                RawState {
                    id: format!("s{k}"),
                    prob: Probability::new(p),
                    alternatives,
                }
            })
            .collect();
        if let Ok(t) = RawTree::new(classes.clone(), states) {
            return t;
        }
    }
}
