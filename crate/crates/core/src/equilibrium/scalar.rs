use serde::Serialize;

use crate::dynamics::Valuations;
use crate::error::{CpalError, Result};
use crate::tree::ReducedTree;

/// Two-class dynamics projected onto the valuation gap `x = v_0 - v_1`:
/// `x' = f(x) = g_0(x) - g_1(x) - x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarReduction {
    pub beta: f64,
    p00: f64,
    p11: f64,
    p01: f64,
    u00: f64,
    u11: f64,
    u01: f64,
    u10: f64,
    lo: [f64; 2],
    hi: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarRoot {
    pub x: f64,
    pub slope: f64,
    pub stable: bool,
    /// The corresponding two-class equilibrium `(g_0(x), g_1(x))`.
    pub valuations: Valuations,
}

/// Builds the scalar field of a two-class tree with states `{0}`, `{1}` and
/// `{0, 1}`.
pub fn reduce_1d(t: &ReducedTree, beta: f64) -> Result<ScalarReduction> {
    if t.n_classes() != 2 {
        return Err(CpalError::Unsupported(format!(
            "scalar reduction needs exactly two classes, got {}",
            t.n_classes()
        )));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(CpalError::validation(format!("beta {beta} must be finite and >= 0")));
    }
    let state = |mask: u64| {
        t.state_by_mask(mask)
            .map(|k| &t.states()[k])
            .ok_or_else(|| CpalError::validation("scalar reduction needs states {0}, {1} and {0, 1}"))
    };
    let (s0, s1, s01) = (state(0b01)?, state(0b10)?, state(0b11)?);
    let bx = t.payoff_box();
    Ok(ScalarReduction {
        beta,
        p00: s0.prob(),
        p11: s1.prob(),
        p01: s01.prob(),
        u00: s0.payoffs()[0],
        u11: s1.payoffs()[0],
        u01: s01.payoffs()[0],
        u10: s01.payoffs()[1],
        lo: [bx.lo[0], bx.lo[1]],
        hi: [bx.hi[0], bx.hi[1]],
    })
}

impl ScalarReduction {
    // σ and 1 - σ, each computed without cancellation.
    fn sigma(&self, x: f64) -> (f64, f64) {
        let bx = self.beta * x;
        (1.0 / (1.0 + (-bx).exp()), 1.0 / (1.0 + bx.exp()))
    }

    pub fn g(&self, x: f64) -> (f64, f64) {
        let (s, c) = self.sigma(x);
        let g0 = (self.p00 * self.u00 + self.p01 * s * self.u01) / (self.p00 + self.p01 * s);
        let g1 = (self.p11 * self.u11 + self.p01 * c * self.u10) / (self.p11 + self.p01 * c);
        (g0, g1)
    }

    pub fn f(&self, x: f64) -> f64 {
        let (g0, g1) = self.g(x);
        g0 - g1 - x
    }

    pub fn df(&self, x: f64) -> f64 {
        let (s, c) = self.sigma(x);
        let a = self.p00 * (self.u01 - self.u00) / (self.p00 + self.p01 * s).powi(2);
        let b = self.p11 * (self.u10 - self.u11) / (self.p11 + self.p01 * c).powi(2);
        self.beta * s * c * self.p01 * (a + b) - 1.0
    }

    /// Interval containing every root.
    pub fn bracket(&self) -> (f64, f64) {
        (self.lo[0] - self.hi[1] - 1.0, self.hi[0] - self.lo[1] + 1.0)
    }

    /// Roots found by a 1024-point sign scan of [`Self::bracket`], each
    /// refined by bisection to `1e-13`. Roots are in increasing order.
    pub fn roots(&self) -> Vec<ScalarRoot> {
        let (lo, hi) = self.bracket();
        let n = 1024;
        let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| self.f(x)).collect();
        let mut out = Vec::new();
        for i in 0..n - 1 {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let (fa, fb) = (fs[i], fs[i + 1]);
            let x = if fa == 0.0 {
                a
            } else if fa.signum() == fb.signum() || fb == 0.0 {
                continue;
            } else {
                while b - a > 1e-13 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if self.f(m).signum() == fa.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            };
            let slope = self.df(x);
            let (g0, g1) = self.g(x);
            out.push(ScalarRoot {
                x,
                slope,
                stable: slope < 0.0,
                valuations: Valuations(vec![g0, g1]),
            });
        }
        if fs[n - 1] == 0.0 {
            let x = xs[n - 1];
            let slope = self.df(x);
            let (g0, g1) = self.g(x);
            out.push(ScalarRoot { x, slope, stable: slope < 0.0, valuations: Valuations(vec![g0, g1]) });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn multiplicity_tree_has_saddle_between_sinks() {
        let r = reduce_1d(&fixtures::multiplicity_tree(), 50.0).unwrap();
        let roots = r.roots();
        assert_eq!(roots.len(), 3);
        assert!(roots[0].stable && !roots[1].stable && roots[2].stable);
        assert!((roots[0].x + 0.5).abs() < 1e-6);
        assert!((roots[2].x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mixed_regime_single_stable_root() {
        let r = reduce_1d(&fixtures::unique_mixed_tree(), 50.0).unwrap();
        let roots = r.roots();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].x.abs() < 0.05 && roots[0].stable);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let r = reduce_1d(&fixtures::multiplicity_tree(), 7.0).unwrap();
        for i in 0..50 {
            let x = -2.0 + 0.08 * i as f64;
            let h = 1e-6;
            let fd = (r.f(x + h) - r.f(x - h)) / (2.0 * h);
            assert!((fd - r.df(x)).abs() <= 1e-6 * r.df(x).abs().max(1.0));
        }
    }

    #[test]
    fn needs_two_classes() {
        let t = fixtures::uniform_three_class(&[0.0; 3], &[0.0; 6], &[0.0; 3]);
        assert!(matches!(reduce_1d(&t, 1.0), Err(CpalError::Unsupported(_))));
    }
}
