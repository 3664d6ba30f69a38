//! Decision trees before and after the similarity transformation.
//!
//! A [`RawTree`] lists nature's states, the alternatives available in each
//! state and the similarity class every alternative belongs to. Reducing it
//! merges all states that span the same set of classes into one state of a
//! [`ReducedTree`], whose probability is the total probability of the merged
//! states and whose class payoffs are probability-weighted averages of the
//! within-class uniform mean payoffs.
//!
//! Classes keep their declaration order; every valuation vector, policy and
//! matrix in the crate is indexed by that order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_rational::Ratio;

use crate::error::{CpalError, Result};

/// Largest number of similarity classes a tree may declare. State supports
/// are stored as bit masks.
pub const MAX_CLASSES: usize = 64;

/// Tolerance for the probability-sum check when some probability is not an
/// exact rational.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A state probability. Keeps the exact rational when the value was given as
/// one (`"1/3"`), so sums can be checked without rounding noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    value: f64,
    exact: Option<Ratio<i64>>,
}

impl Probability {
    pub fn new(value: f64) -> Self {
        let exact = exact_from_f64(value);
        Probability { value, exact }
    }

    pub fn ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(CpalError::validation(format!(
                "probability {numer}/{denom} has a zero denominator"
            )));
        }
        let r = Ratio::new(numer, denom);
        Ok(Probability {
            value: *r.numer() as f64 / *r.denom() as f64,
            exact: Some(r),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<Ratio<i64>> {
        self.exact
    }

    /// Parses `"0.25"`, `"1/4"` or `"1"`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n: i64 = n
                .trim()
                .parse()
                .map_err(|_| CpalError::validation(format!("bad probability {text:?}")))?;
            let d: i64 = d
                .trim()
                .parse()
                .map_err(|_| CpalError::validation(format!("bad probability {text:?}")))?;
            Probability::ratio(n, d)
        } else {
            let v: f64 = text
                .parse()
                .map_err(|_| CpalError::validation(format!("bad probability {text:?}")))?;
            Ok(Probability::new(v))
        }
    }

    fn checked_add(self, other: Probability) -> Probability {
        let exact = match (self.exact, other.exact) {
            (Some(a), Some(b)) => checked_ratio_add(a, b),
            _ => None,
        };
        let value = match exact {
            Some(r) => *r.numer() as f64 / *r.denom() as f64,
            None => self.value + other.value,
        };
        Probability { value, exact }
    }
}

impl From<f64> for Probability {
    fn from(value: f64) -> Self {
        Probability::new(value)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) if *r.denom() != 1 => write!(f, "{}/{}", r.numer(), r.denom()),
            _ => write!(f, "{}", self.value),
        }
    }
}

// Integers and halves/quarters etc. that are exactly representable keep an
// exact form; anything else is treated as a plain float.
fn exact_from_f64(value: f64) -> Option<Ratio<i64>> {
    if !value.is_finite() {
        return None;
    }
    for denom in [1i64, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024] {
        let scaled = value * denom as f64;
        if scaled.fract() == 0.0 && scaled.abs() < 1e15 {
            return Some(Ratio::new(scaled as i64, denom));
        }
    }
    None
}

fn checked_ratio_add(a: Ratio<i64>, b: Ratio<i64>) -> Option<Ratio<i64>> {
    let (an, ad) = (*a.numer() as i128, *a.denom() as i128);
    let (bn, bd) = (*b.numer() as i128, *b.denom() as i128);
    let n = an.checked_mul(bd)?.checked_add(bn.checked_mul(ad)?)?;
    let d = ad.checked_mul(bd)?;
    let g = gcd_i128(n.abs(), d.abs()).max(1);
    let (n, d) = (n / g, d / g);
    Some(Ratio::new(i64::try_from(n).ok()?, i64::try_from(d).ok()?))
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn check_probability_sum(probs: &[Probability], what: &str) -> Result<()> {
    let exact_sum = probs
        .iter()
        .try_fold(Ratio::new(0i64, 1), |acc, p| p.exact.and_then(|r| checked_ratio_add(acc, r)));
    if let Some(sum) = exact_sum {
        if sum != Ratio::new(1, 1) {
            return Err(CpalError::validation(format!(
                "{what} probabilities sum to {}/{}, expected 1",
                sum.numer(),
                sum.denom()
            )));
        }
        return Ok(());
    }
    let sum: f64 = probs.iter().map(|p| p.value).sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(CpalError::validation(format!(
            "{what} probabilities sum to {sum}, expected 1 within {PROB_SUM_TOL:e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawAlternative {
    pub id: String,
    pub class: String,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawState {
    pub id: String,
    pub prob: Probability,
    pub alternatives: Vec<RawAlternative>,
}

/// A decision tree over concrete alternatives together with the similarity
/// mapping from alternatives to classes.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTree {
    classes: Vec<String>,
    states: Vec<RawState>,
}

impl RawTree {
    pub fn new(classes: Vec<String>, states: Vec<RawState>) -> Result<Self> {
        validate_class_names(&classes)?;
        if states.is_empty() {
            return Err(CpalError::validation("tree has no states"));
        }
        let index = class_index(&classes);
        let mut hit = vec![false; classes.len()];
        let mut ids = HashSet::new();
        for (k, state) in states.iter().enumerate() {
            if !ids.insert(state.id.as_str()) {
                return Err(CpalError::validation(format!(
                    "state #{k}: duplicate state id {:?}",
                    state.id
                )));
            }
            let p = state.prob.value;
            if !(p > 0.0 && p <= 1.0) {
                return Err(CpalError::validation(format!(
                    "state {:?}: probability {p} must lie in (0, 1]",
                    state.id
                )));
            }
            if state.alternatives.is_empty() {
                return Err(CpalError::validation(format!(
                    "state {:?}: empty alternative set",
                    state.id
                )));
            }
            let mut alt_ids = HashSet::new();
            for alt in &state.alternatives {
                if !alt_ids.insert(alt.id.as_str()) {
                    return Err(CpalError::validation(format!(
                        "state {:?}: duplicate alternative {:?}",
                        state.id, alt.id
                    )));
                }
                let Some(&c) = index.get(alt.class.as_str()) else {
                    return Err(CpalError::validation(format!(
                        "state {:?}: alternative {:?} maps to undeclared class {:?}",
                        state.id, alt.id, alt.class
                    )));
                };
                if !alt.payoff.is_finite() {
                    return Err(CpalError::validation(format!(
                        "state {:?}: alternative {:?} has non-finite payoff",
                        state.id, alt.id
                    )));
                }
                hit[c] = true;
            }
        }
        if let Some(c) = hit.iter().position(|h| !h) {
            return Err(CpalError::validation(format!(
                "class {:?} is not hit by any alternative",
                classes[c]
            )));
        }
        let probs: Vec<Probability> = states.iter().map(|s| s.prob).collect();
        check_probability_sum(&probs, "state")?;
        Ok(RawTree { classes, states })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn states(&self) -> &[RawState] {
        &self.states
    }

    pub fn class_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Class mask spanned by the alternatives of raw state `k`.
    pub fn state_mask(&self, k: usize) -> u64 {
        self.states[k]
            .alternatives
            .iter()
            .map(|a| 1u64 << self.class_of(&a.class).expect("validated"))
            .fold(0, |m, b| m | b)
    }
}

/// One state of the reduced tree: a set of classes with its probability and
/// the expected payoff of choosing each of them.
#[derive(Debug, Clone)]
pub struct ReducedState {
    members: Vec<usize>,
    mask: u64,
    prob: Probability,
    base_payoffs: Vec<f64>,
    payoffs: Vec<f64>,
}

impl ReducedState {
    /// `members` are class indices, `payoffs[i]` belongs to `members[i]`.
    /// Members are sorted into class order.
    pub fn new(members: Vec<usize>, prob: impl Into<Probability>, payoffs: Vec<f64>) -> Self {
        let mut pairs: Vec<(usize, f64)> = members.into_iter().zip(payoffs).collect();
        pairs.sort_by_key(|&(c, _)| c);
        let members: Vec<usize> = pairs.iter().map(|&(c, _)| c).collect();
        let payoffs: Vec<f64> = pairs.iter().map(|&(_, x)| x).collect();
        let mask = members.iter().fold(0u64, |m, &c| m | (1u64 << (c as u32 % 64)));
        ReducedState {
            members,
            mask,
            prob: prob.into(),
            base_payoffs: payoffs.clone(),
            payoffs,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn prob(&self) -> f64 {
        self.prob.value
    }

    pub fn probability(&self) -> Probability {
        self.prob
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_unary(&self) -> bool {
        self.members.len() == 1
    }

    /// Position of class `s` within this state, if present.
    pub fn position(&self, s: usize) -> Option<usize> {
        self.members.iter().position(|&c| c == s)
    }

    pub fn payoff_of(&self, s: usize) -> Option<f64> {
        self.position(s).map(|i| self.payoffs[i])
    }

    fn apply_shift(&mut self, shift: f64) {
        self.payoffs = if self.is_unary() {
            self.base_payoffs.iter().map(|x| x + shift).collect()
        } else {
            self.base_payoffs.clone()
        };
    }
}

/// The similarity-transformed tree: states are distinct non-empty subsets of
/// classes drawn with positive probability.
#[derive(Debug, Clone)]
pub struct ReducedTree {
    classes: Vec<String>,
    states: Vec<ReducedState>,
    // Accumulated constant added to unary payoffs; kept apart from the base
    // payoffs so that shifting by `a` and then `-a` restores the tree exactly.
    unary_shift: f64,
    // class -> (state index, position in state)
    incidence: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for ReducedTree {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes
            && self.states.len() == other.states.len()
            && self.states.iter().zip(&other.states).all(|(a, b)| {
                a.members == b.members && a.prob.value == b.prob.value && a.payoffs == b.payoffs
            })
    }
}

impl ReducedTree {
    pub fn new(classes: Vec<String>, states: Vec<ReducedState>) -> Result<Self> {
        validate_class_names(&classes)?;
        let n = classes.len();
        if states.is_empty() {
            return Err(CpalError::validation("reduced tree has no states"));
        }
        let mut seen = HashSet::new();
        for (k, st) in states.iter().enumerate() {
            if st.members.is_empty() {
                return Err(CpalError::validation(format!("state #{k}: empty class subset")));
            }
            if st.members.len() != st.base_payoffs.len() {
                return Err(CpalError::validation(format!(
                    "state #{k}: {} classes but {} payoffs",
                    st.members.len(),
                    st.base_payoffs.len()
                )));
            }
            if st.members.windows(2).any(|w| w[0] == w[1]) {
                return Err(CpalError::validation(format!("state #{k}: repeated class")));
            }
            if let Some(&c) = st.members.iter().find(|&&c| c >= n) {
                return Err(CpalError::validation(format!(
                    "state #{k}: class index {c} out of range"
                )));
            }
            if !seen.insert(st.mask) {
                return Err(CpalError::validation(format!(
                    "state #{k}: class subset appears twice"
                )));
            }
            let p = st.prob.value;
            if !(p > 0.0 && p <= 1.0) {
                return Err(CpalError::validation(format!(
                    "state #{k}: probability {p} must lie in (0, 1]"
                )));
            }
            if st.base_payoffs.iter().any(|x| !x.is_finite()) {
                return Err(CpalError::validation(format!("state #{k}: non-finite payoff")));
            }
        }
        let probs: Vec<Probability> = states.iter().map(|s| s.prob).collect();
        check_probability_sum(&probs, "state")?;

        let mut incidence = vec![Vec::new(); n];
        for (k, st) in states.iter().enumerate() {
            for (i, &c) in st.members.iter().enumerate() {
                incidence[c].push((k, i));
            }
        }
        if let Some(c) = incidence.iter().position(|v| v.is_empty()) {
            return Err(CpalError::validation(format!(
                "class {:?} appears in no state",
                classes[c]
            )));
        }
        Ok(ReducedTree {
            classes,
            states,
            unary_shift: 0.0,
            incidence,
        })
    }

    /// Convenience constructor from class names.
    pub fn from_named<P: Into<Probability>>(
        classes: &[&str],
        states: Vec<(Vec<&str>, P, Vec<f64>)>,
    ) -> Result<Self> {
        let classes: Vec<String> = classes.iter().map(|s| s.to_string()).collect();
        let index = class_index(&classes);
        let mut built = Vec::with_capacity(states.len());
        for (names, p, payoffs) in states {
            let members = names
                .iter()
                .map(|name| {
                    index
                        .get(name)
                        .copied()
                        .ok_or_else(|| CpalError::validation(format!("unknown class {name:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            built.push(ReducedState::new(members, p, payoffs));
        }
        ReducedTree::new(classes, built)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn states(&self) -> &[ReducedState] {
        &self.states
    }

    pub fn class_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// `(state index, position)` pairs for every state containing class `s`.
    pub fn incidence(&self, s: usize) -> &[(usize, usize)] {
        &self.incidence[s]
    }

    pub fn state_by_mask(&self, mask: u64) -> Option<usize> {
        self.states.iter().position(|st| st.mask == mask)
    }

    pub fn unary_shift(&self) -> f64 {
        self.unary_shift
    }

    /// Smallest and largest payoff anywhere in the tree.
    pub fn payoff_range(&self) -> (f64, f64) {
        self.states
            .iter()
            .flat_map(|s| s.payoffs.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    /// Pairs of classes offered together at some state with payoffs tied
    /// within `1e-12` of the payoff range. Such trees are not generic and
    /// their equilibrium classification is ambiguous.
    pub fn genericity_warnings(&self) -> Vec<String> {
        let (lo, hi) = self.payoff_range();
        let tol = 1e-12 * (hi - lo).max(1.0);
        let mut out = Vec::new();
        for (k, st) in self.states.iter().enumerate() {
            for i in 0..st.len() {
                for j in i + 1..st.len() {
                    if (st.payoffs[i] - st.payoffs[j]).abs() <= tol {
                        out.push(format!(
                            "state #{k}: classes {:?} and {:?} have tied payoffs {}",
                            self.classes[st.members[i]], self.classes[st.members[j]], st.payoffs[i]
                        ));
                    }
                }
            }
        }
        for w in &out {
            log::warn!("{w}");
        }
        out
    }

    /// Adds `z` to the payoff of every single-class state.
    pub fn shift_unary_payoffs(&self, z: f64) -> ReducedTree {
        let mut out = self.clone();
        out.unary_shift = self.unary_shift + z;
        for st in &mut out.states {
            st.apply_shift(out.unary_shift);
        }
        out
    }

    /// Adds `c` to every payoff. Used for translation checks.
    pub fn translate_payoffs(&self, c: f64) -> ReducedTree {
        let mut out = self.clone();
        out.unary_shift = 0.0;
        for st in &mut out.states {
            st.base_payoffs = st.payoffs.iter().map(|x| x + c).collect();
            st.payoffs = st.base_payoffs.clone();
        }
        out
    }

    /// Replaces the payoff of class `s` at the state with support `mask`.
    pub fn with_payoff(&self, mask: u64, s: usize, payoff: f64) -> Result<ReducedTree> {
        let k = self
            .state_by_mask(mask)
            .ok_or_else(|| CpalError::validation("no state with that class subset"))?;
        let i = self.states[k]
            .position(s)
            .ok_or_else(|| CpalError::validation("class not offered at that state"))?;
        let mut out = self.clone();
        out.unary_shift = 0.0;
        for st in &mut out.states {
            st.base_payoffs = st.payoffs.clone();
        }
        out.states[k].base_payoffs[i] = payoff;
        out.states[k].payoffs[i] = payoff;
        Ok(out)
    }

    pub fn support_profile(&self) -> SupportProfile {
        support_profile(self)
    }

    pub fn payoff_box(&self) -> PayoffBox {
        payoff_box(self)
    }
}

fn validate_class_names(classes: &[String]) -> Result<()> {
    if classes.is_empty() {
        return Err(CpalError::validation("no similarity classes declared"));
    }
    if classes.len() > MAX_CLASSES {
        return Err(CpalError::validation(format!(
            "{} classes declared, at most {MAX_CLASSES} supported",
            classes.len()
        )));
    }
    let mut seen = HashSet::new();
    for c in classes {
        if !seen.insert(c.as_str()) {
            return Err(CpalError::validation(format!("class {c:?} declared twice")));
        }
    }
    Ok(())
}

fn class_index(classes: &[String]) -> HashMap<&str, usize> {
    classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect()
}

/// Merges raw states spanning the same class subset.
///
/// The merged probability is the sum of the raw probabilities. The payoff of
/// class `s` is the probability-weighted average, over the merged raw states,
/// of the uniform mean payoff of the class-`s` alternatives in each state.
/// Reduced states appear in order of first occurrence.
pub fn reduce(raw: &RawTree) -> Result<ReducedTree> {
    let n = raw.classes.len();
    let mut order: Vec<u64> = Vec::new();
    let mut groups: HashMap<u64, Vec<usize>> = HashMap::new();
    for k in 0..raw.states.len() {
        let mask = raw.state_mask(k);
        groups
            .entry(mask)
            .or_insert_with(|| {
                order.push(mask);
                Vec::new()
            })
            .push(k);
    }

    let mut states = Vec::with_capacity(order.len());
    for mask in order {
        let members: Vec<usize> = (0..n).filter(|&c| mask & (1u64 << c) != 0).collect();
        let mut prob = Probability::ratio(0, 1)?;
        let mut weighted = vec![0.0; members.len()];
        let mut total = 0.0;
        for &k in &groups[&mask] {
            let st = &raw.states[k];
            prob = prob.checked_add(st.prob);
            total += st.prob.value;
            for (i, &c) in members.iter().enumerate() {
                let (sum, count) = st
                    .alternatives
                    .iter()
                    .filter(|a| raw.class_of(&a.class) == Some(c))
                    .fold((0.0, 0usize), |(s, m), a| (s + a.payoff, m + 1));
                weighted[i] += st.prob.value * sum / count as f64;
            }
        }
        let payoffs = weighted.iter().map(|w| w / total).collect();
        states.push(ReducedState::new(members, prob, payoffs));
    }
    ReducedTree::new(raw.classes.clone(), states)
}

/// Support flags of a reduced tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SupportProfile {
    /// Every single-class state has positive probability.
    pub has_all_unary: bool,
    /// Every two-class state has positive probability.
    pub has_all_binary: bool,
    /// `ω ⊆ ω'` implies `p(ω) ≤ p(ω')` over all non-empty subsets, with
    /// absent subsets counted as probability zero.
    pub monotone: bool,
    /// All single-class states share one probability.
    pub uniform_unary: bool,
}

impl SupportProfile {
    /// Both clauses of the monotonicity assumption: subset monotonicity and
    /// equiprobable unary states.
    pub fn satisfies_monotonicity(&self) -> bool {
        self.monotone && self.uniform_unary
    }
}

pub fn support_profile(t: &ReducedTree) -> SupportProfile {
    let n = t.n_classes();
    let prob_of = |mask: u64| t.state_by_mask(mask).map_or(0.0, |k| t.states[k].prob.value);

    let unary: Vec<f64> = (0..n).map(|s| prob_of(1u64 << s)).collect();
    let has_all_unary = unary.iter().all(|&p| p > 0.0);
    let has_all_binary =
        (0..n).all(|s| (s + 1..n).all(|k| prob_of((1u64 << s) | (1u64 << k)) > 0.0));
    let uniform_unary = unary.iter().all(|&p| (p - unary[0]).abs() <= PROB_SUM_TOL);

    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut monotone = true;
    'outer: for st in &t.states {
        // Every proper superset must carry at least this state's probability.
        let free = full & !st.mask;
        let mut sub = free;
        while sub != 0 {
            if prob_of(st.mask | sub) < st.prob.value - PROB_SUM_TOL {
                monotone = false;
                break 'outer;
            }
            sub = (sub - 1) & free;
        }
    }

    SupportProfile {
        has_all_unary,
        has_all_binary,
        monotone,
        uniform_unary,
    }
}

/// Per-class payoff interval `[lo_s, hi_s]` over the states offering `s`.
/// The product of the intervals contains `g(v)` for every `v` and every
/// sensitivity, hence every equilibrium.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PayoffBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl PayoffBox {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, v: &[f64], slack: f64) -> bool {
        v.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&x, (&lo, &hi))| x >= lo - slack && x <= hi + slack)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Box grown by `frac` of each side's width (at least `frac` in absolute
    /// terms for degenerate sides).
    pub fn inflated(&self, frac: f64) -> PayoffBox {
        let pad: Vec<f64> =
            self.lo.iter().zip(&self.hi).map(|(a, b)| frac * (b - a).max(1.0)).collect();
        PayoffBox {
            lo: self.lo.iter().zip(&pad).map(|(a, p)| a - p).collect(),
            hi: self.hi.iter().zip(&pad).map(|(b, p)| b + p).collect(),
        }
    }

    pub fn max_width(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }
}

pub fn payoff_box(t: &ReducedTree) -> PayoffBox {
    let n = t.n_classes();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for st in &t.states {
        for (&c, &x) in st.members.iter().zip(&st.payoffs) {
            lo[c] = lo[c].min(x);
            hi[c] = hi[c].max(x);
        }
    }
    PayoffBox { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bob_reduces_to_two_states() {
        let t = reduce(&fixtures::bob_raw()).unwrap();
        assert_eq!(t.classes(), &["apples".to_string(), "citrus".to_string()]);
        assert_eq!(t.states().len(), 2);
        let both = &t.states()[0];
        assert_eq!(both.members(), &[0, 1]);
        assert_eq!(both.probability().exact(), Some(Ratio::new(2, 3)));
        assert!((both.payoffs()[0] - 2.0).abs() < 1e-12);
        assert!((both.payoffs()[1] - 3.0).abs() < 1e-12);
        let citrus = &t.states()[1];
        assert_eq!(citrus.members(), &[1]);
        assert!((citrus.prob() - 1.0 / 3.0).abs() < 1e-12);
        assert!((citrus.payoffs()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_partition_keeps_states() {
        let alt = |id: &str, class: &str, payoff| RawAlternative {
            id: id.into(),
            class: class.into(),
            payoff,
        };
        let raw = RawTree::new(
            vec!["a".into(), "b".into()],
            vec![
                RawState {
                    id: "x".into(),
                    prob: Probability::ratio(1, 4).unwrap(),
                    alternatives: vec![alt("a1", "a", 1.5)],
                },
                RawState {
                    id: "y".into(),
                    prob: Probability::ratio(3, 4).unwrap(),
                    alternatives: vec![alt("b1", "b", -2.0)],
                },
            ],
        )
        .unwrap();
        let t = reduce(&raw).unwrap();
        assert_eq!(t.states().len(), 2);
        assert_eq!(t.states()[0].members(), &[0]);
        assert_eq!(t.states()[0].payoffs(), &[1.5]);
        assert_eq!(t.states()[0].prob(), 0.25);
        assert_eq!(t.states()[1].members(), &[1]);
        assert_eq!(t.states()[1].payoffs(), &[-2.0]);
    }

    #[test]
    fn raw_validation_errors() {
        let alt = |id: &str, class: &str| RawAlternative {
            id: id.into(),
            class: class.into(),
            payoff: 0.0,
        };
        let state = |id: &str, p: f64, alts| RawState {
            id: id.into(),
            prob: p.into(),
            alternatives: alts,
        };
        let classes = || vec!["a".to_string(), "b".to_string()];
        let dup = RawTree::new(
            classes(),
            vec![state("x", 1.0, vec![alt("a1", "a"), alt("a1", "b")])],
        );
        assert!(matches!(dup, Err(CpalError::Validation(m)) if m.contains("duplicate alternative")));
        let zero = RawTree::new(
            classes(),
            vec![
                state("x", 0.0, vec![alt("a1", "a")]),
                state("y", 1.0, vec![alt("b1", "b")]),
            ],
        );
        assert!(matches!(zero, Err(CpalError::Validation(m)) if m.contains("probability")));
        let unmapped = RawTree::new(classes(), vec![state("x", 1.0, vec![alt("c1", "c")])]);
        assert!(matches!(unmapped, Err(CpalError::Validation(m)) if m.contains("undeclared")));
        let unhit = RawTree::new(classes(), vec![state("x", 1.0, vec![alt("a1", "a")])]);
        assert!(matches!(unhit, Err(CpalError::Validation(m)) if m.contains("not hit")));
    }

    #[test]
    fn exact_thirds_sum_to_one() {
        let p = Probability::parse("1/3").unwrap();
        let t = ReducedTree::from_named(
            &["a", "b", "c"],
            vec![(vec!["a"], p, vec![0.0]), (vec!["b"], p, vec![0.0]), (vec!["c"], p, vec![0.0])],
        );
        assert!(t.is_ok());
        let bad = ReducedTree::from_named(
            &["a", "b"],
            vec![(vec!["a"], p, vec![0.0]), (vec!["b"], p, vec![0.0])],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn reduced_rejects_duplicate_subsets() {
        let t = ReducedTree::from_named(
            &["a", "b"],
            vec![(vec!["a", "b"], 0.5, vec![0.0, 1.0]), (vec!["b", "a"], 0.5, vec![1.0, 0.0])],
        );
        assert!(t.is_err());
    }

    #[test]
    fn shift_unary_payoffs_examples() {
        let t31 = fixtures::two_class_tree(0.0, 0.0);
        let t32 = t31.shift_unary_payoffs(3.0);
        assert_eq!(t32, fixtures::two_class_tree(3.0, 3.0));
        assert_eq!(t31.shift_unary_payoffs(0.0), t31);

        let t = fixtures::uniform_three_class(&[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6, 0.7, 0.8, 0.9], &[0.3, 0.2, 0.1]);
        let s = t.shift_unary_payoffs(-100.0);
        for (a, b) in t.states().iter().zip(s.states()) {
            for (x, y) in a.payoffs().iter().zip(b.payoffs()) {
                if a.is_unary() {
                    assert_eq!(*y, x - 100.0);
                } else {
                    assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn support_profiles() {
        let p = fixtures::two_class_tree(0.0, 0.0).support_profile();
        assert!(p.has_all_unary && p.has_all_binary);
        let u = fixtures::uniform_three_class(&[0.0; 3], &[0.0; 6], &[0.0; 3]).support_profile();
        assert!(u.monotone && u.uniform_unary && u.satisfies_monotonicity());
        let missing = ReducedTree::from_named(
            &["L", "R"],
            vec![(vec!["L", "R"], 0.5, vec![2.0, 1.0]), (vec!["L"], 0.5, vec![0.0])],
        )
        .unwrap()
        .support_profile();
        assert!(!missing.has_all_unary);
        // {L} more likely than its superset {L,R}.
        let skewed = ReducedTree::from_named(
            &["L", "R"],
            vec![
                (vec!["L", "R"], 0.2, vec![2.0, 1.0]),
                (vec!["L"], 0.5, vec![0.0]),
                (vec!["R"], 0.3, vec![0.0]),
            ],
        )
        .unwrap()
        .support_profile();
        assert!(!skewed.monotone && !skewed.uniform_unary);
    }

    #[test]
    fn payoff_box_examples() {
        let b = fixtures::two_class_tree(0.0, 0.0).payoff_box();
        assert_eq!(b.lo, vec![0.0, 0.0]);
        assert_eq!(b.hi, vec![2.0, 1.0]);
        let single = ReducedTree::from_named(&["a"], vec![(vec!["a"], 1.0, vec![4.25])]).unwrap();
        let b = single.payoff_box();
        assert_eq!((b.lo[0], b.hi[0]), (4.25, 4.25));
    }

    #[test]
    fn tied_payoffs_are_flagged() {
        let t = ReducedTree::from_named(
            &["L", "R"],
            vec![(vec!["L", "R"], 0.5, vec![1.0, 1.0]), (vec!["L"], 0.5, vec![0.0])],
        )
        .unwrap();
        assert_eq!(t.genericity_warnings().len(), 1);
        assert!(fixtures::two_class_tree(0.0, 0.0).genericity_warnings().is_empty());
    }
}
