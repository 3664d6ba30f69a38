use itertools::Itertools;
use serde::Serialize;

use super::tie_tolerance;
use crate::dynamics::Valuations;
use crate::error::{CpalError, Result};
use crate::tree::ReducedTree;

/// Largest class count accepted by [`enumerate_pure_ve`].
pub const MAX_ENUMERATION_CLASSES: usize = 10;

/// A pure valuation equilibrium: deterministic choices at every state and
/// valuations consistent with them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PureVE {
    /// Classes from highest to lowest rank, as hypothesised.
    pub order: Vec<usize>,
    pub valuations: Valuations,
    /// Smallest gap between the chosen class and another class at any state.
    pub margin: f64,
    /// `margin` is at least the tie tolerance.
    pub strict: bool,
    /// Chosen class per state.
    pub choices: Vec<usize>,
}

// Choices and consistent valuations induced by a ranking. None if some class
// is never chosen.
fn induced(t: &ReducedTree, rank: &[usize]) -> Option<(Vec<usize>, Vec<f64>)> {
    let n = t.n_classes();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    let choices: Vec<usize> = t
        .states()
        .iter()
        .map(|st| {
            let (i, &c) = st
                .members()
                .iter()
                .enumerate()
                .min_by_key(|&(_, &c)| rank[c])
                .expect("non-empty state");
            num[c] += st.prob() * st.payoffs()[i];
            den[c] += st.prob();
            c
        })
        .collect();
    if den.iter().any(|&d| d == 0.0) {
        return None;
    }
    Some((choices, num.iter().zip(&den).map(|(a, b)| a / b).collect()))
}

fn margin(t: &ReducedTree, choices: &[usize], v: &[f64]) -> f64 {
    t.states()
        .iter()
        .zip(choices)
        .flat_map(|(st, &c)| st.members().iter().filter(move |&&k| k != c).map(move |&k| v[c] - v[k]))
        .fold(f64::INFINITY, f64::min)
}

fn pure_ve(t: &ReducedTree, order: Vec<usize>, eps: f64) -> Option<PureVE> {
    let mut rank = vec![0; t.n_classes()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let (choices, v) = induced(t, &rank)?;
    let margin = margin(t, &choices, &v);
    Some(PureVE {
        order,
        valuations: Valuations(v),
        margin,
        strict: margin >= eps,
        choices,
    })
}

/// Every pure VE with a strict argmax at each state, found by trying every
/// ranking of the classes.
///
/// Rankings that leave some class unchosen are skipped, since its valuation
/// is then undetermined. Rankings that induce the same choices are reported
/// once.
pub fn enumerate_pure_ve(t: &ReducedTree) -> Result<Vec<PureVE>> {
    let n = t.n_classes();
    if n > MAX_ENUMERATION_CLASSES {
        return Err(CpalError::Unsupported(format!(
            "{n} classes means {n}! rankings; enumeration is limited to {MAX_ENUMERATION_CLASSES} classes. \
             Use find_all at a large beta instead."
        )));
    }
    let eps = tie_tolerance(t);
    let mut out: Vec<PureVE> = Vec::new();
    for order in (0..n).permutations(n) {
        if let Some(ve) = pure_ve(t, order, eps) {
            if ve.margin > 0.0 && !out.iter().any(|o| o.choices == ve.choices) {
                out.push(ve);
            }
        }
    }
    Ok(out)
}

/// Builds a ranking greedily: the next class is the one with the smallest
/// share of its remaining probability mass on its own single-class state,
/// where remaining states are those offering only unranked classes. Ties go
/// to class order.
pub fn construct_strict_pure_ve(t: &ReducedTree) -> Result<PureVE> {
    let n = t.n_classes();
    let unary: Vec<f64> = (0..n)
        .map(|s| {
            t.state_by_mask(1u64 << s)
                .map(|k| t.states()[k].prob())
                .ok_or_else(|| CpalError::validation(format!("class {:?} has no single-class state", t.classes()[s])))
        })
        .collect::<Result<_>>()?;
    let mut remaining: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut order = Vec::with_capacity(n);
    while remaining != 0 {
        let mut pick: Option<(usize, f64)> = None;
        for s in (0..n).filter(|&s| remaining >> s & 1 == 1) {
            let mass: f64 = t
                .incidence(s)
                .iter()
                .map(|&(k, _)| &t.states()[k])
                .filter(|st| st.mask() & !remaining == 0)
                .map(|st| st.prob())
                .sum();
            let ratio = unary[s] / mass;
            if pick.map_or(true, |(_, r)| ratio < r) {
                pick = Some((s, ratio));
            }
        }
        let (s, _) = pick.expect("remaining is non-empty");
        order.push(s);
        remaining &= !(1u64 << s);
    }
    let ve = pure_ve(t, order, tie_tolerance(t)).expect("every class keeps its single-class state");
    if ve.margin <= 0.0 {
        return Err(CpalError::ConstructionInvalid(format!(
            "ranking {:?} is not self-confirming (margin {:e}); single-class payoffs are too high",
            ve.order.iter().map(|&c| &t.classes()[c]).collect::<Vec<_>>(),
            ve.margin
        )));
    }
    Ok(ve)
}

/// Limit of a mixed equilibrium of a two-class tree: the common valuation
/// and the probability `q` of choosing the first class at the two-class state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedLimit {
    pub q: f64,
    pub v: f64,
}

/// Solves `v_0(q) = v_1(q)` by bisection on `q ∈ [0, 1]`, where each side is
/// the consistent valuation when the two-class state mixes with probability
/// `q` on class 0.
pub fn mixed_limit_solve(t: &ReducedTree) -> Result<MixedLimit> {
    if t.n_classes() != 2 {
        return Err(CpalError::Unsupported("mixed limits are solved for two-class trees only".into()));
    }
    let pair = t
        .state_by_mask(0b11)
        .ok_or_else(|| CpalError::validation("tree has no two-class state"))?;
    let st = &t.states()[pair];
    let (p01, u0, u1) = (st.prob(), st.payoffs()[0], st.payoffs()[1]);
    let unary = |s: usize| {
        t.state_by_mask(1 << s)
            .map_or((0.0, 0.0), |k| (t.states()[k].prob(), t.states()[k].payoffs()[0]))
    };
    let (p00, u00) = unary(0);
    let (p11, u11) = unary(1);
    let avg = |pa: f64, ua: f64, w: f64, ub: f64| {
        if pa + w == 0.0 {
            ub
        } else {
            (pa * ua + w * ub) / (pa + w)
        }
    };
    let v0 = |q: f64| avg(p00, u00, p01 * q, u0);
    let v1 = |q: f64| avg(p11, u11, p01 * (1.0 - q), u1);
    let h = |q: f64| v0(q) - v1(q);

    let (mut a, mut b) = (0.0f64, 1.0f64);
    let (ha, hb) = (h(a), h(b));
    if ha == 0.0 {
        return Ok(MixedLimit { q: a, v: v0(a) });
    }
    if hb == 0.0 {
        return Ok(MixedLimit { q: b, v: v0(b) });
    }
    if ha.signum() == hb.signum() {
        return Err(CpalError::NoSignChange(format!(
            "indifference gap has the same sign at q = 0 ({ha:e}) and q = 1 ({hb:e})"
        )));
    }
    let neg_at_a = ha < 0.0;
    while b - a > 1e-14 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let hm = h(m);
        if hm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if (hm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    let q = 0.5 * (a + b);
    Ok(MixedLimit { q, v: 0.5 * (v0(q) + v1(q)) })
}
