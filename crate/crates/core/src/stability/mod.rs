//! Local stability of mean-field equilibria.

mod eigen;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use eigen::{eigenvalues, Eigenvalue};

use crate::dynamics::{class_weights, finite_logz, mean_field_rhs, state_policy, sup_norm, Valuations};
use crate::error::{CpalError, Result};
use crate::tree::ReducedTree;

/// Marginal band on the spectral abscissa.
pub const MARGINAL_BAND: f64 = 1e-8;
/// Off-diagonal entries below this magnitude are treated as absent when
/// testing irreducibility.
pub const IRREDUCIBLE_THRESHOLD: f64 = 1e-12;

/// `∂(g_s - v_s)/∂v_k` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub matrix: DMatrix<f64>,
    pub point: Valuations,
    pub beta: f64,
}

impl JacobianMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }
}

/// Analytic Jacobian of `v -> g(v) - v`.
pub fn jacobian(v: &[f64], t: &ReducedTree, beta: f64) -> Result<JacobianMatrix> {
    let n = t.n_classes();
    if v.len() != n {
        return Err(CpalError::validation("valuation length does not match class count"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(CpalError::validation(format!("beta {beta} must be finite and >= 0")));
    }
    let mut j = DMatrix::<f64>::zeros(n, n);
    let logz = finite_logz(v, t, beta);
    let policies: Vec<Vec<f64>> = t
        .states()
        .iter()
        .map(|st| {
            let mut out = vec![0.0; st.len()];
            state_policy(v, st, beta, &mut out);
            out
        })
        .collect();
    for s in 0..n {
        let inc = t.incidence(s);
        let w = class_weights(v, t, beta, s, &logz);
        let g: f64 = inc
            .iter()
            .zip(&w)
            .map(|(&(k, i), w)| w * t.states()[k].payoffs()[i])
            .sum();
        let mut diag = 0.0;
        for (&(k, i), &wk) in inc.iter().zip(&w) {
            let st = &t.states()[k];
            let sigma = &policies[k];
            let pi = st.payoffs()[i];
            let others: f64 = sigma.iter().enumerate().filter(|&(x, _)| x != i).map(|(_, y)| y).sum();
            diag += wk * others * (pi - g);
            for (x, &c) in st.members().iter().enumerate() {
                if x != i {
                    j[(s, c)] += beta * wk * sigma[x] * (g - pi);
                }
            }
        }
        j[(s, s)] = beta * diag - 1.0;
    }
    Ok(JacobianMatrix {
        matrix: j,
        point: Valuations::from(v),
        beta,
    })
}

/// Largest deviation of a row sum from -1.
pub fn row_sum_defect(j: &DMatrix<f64>) -> f64 {
    j.row_iter()
        .map(|r| (r.iter().sum::<f64>() + 1.0).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disc {
    pub center: f64,
    pub radius: f64,
}

impl Disc {
    /// Distance from `z` to the disc (0 inside).
    pub fn distance(&self, z: &Eigenvalue) -> f64 {
        ((z.re - self.center).hypot(z.im) - self.radius).max(0.0)
    }
}

pub fn gershgorin(j: &DMatrix<f64>) -> Vec<Disc> {
    (0..j.nrows())
        .map(|s| Disc {
            center: j[(s, s)],
            radius: (0..j.ncols()).filter(|&k| k != s).map(|k| j[(s, k)].abs()).sum(),
        })
        .collect()
}

/// Every eigenvalue lies within `tol` of some disc.
pub fn discs_cover(discs: &[Disc], eig: &[Eigenvalue], tol: f64) -> bool {
    eig.iter()
        .all(|z| discs.iter().map(|d| d.distance(z)).fold(f64::INFINITY, f64::min) <= tol)
}

/// All off-diagonal entries strictly positive.
pub fn is_cooperative(j: &DMatrix<f64>) -> bool {
    let n = j.nrows();
    (0..n).all(|s| (0..n).all(|k| k == s || j[(s, k)] > 0.0))
}

/// Strong connectivity of the digraph `s -> k` over `|J_sk| > threshold`.
pub fn is_irreducible(j: &DMatrix<f64>, threshold: f64) -> bool {
    let n = j.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for k in 0..n {
                let e = if forward { j[(s, k)] } else { j[(k, s)] };
                if k != s && !seen[k] && e.abs() > threshold {
                    seen[k] = true;
                    stack.push(k);
                }
            }
        }
        seen.into_iter().all(|x| x)
    };
    reach(true) && reach(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn from_abscissa(a: f64) -> Self {
        if a > MARGINAL_BAND {
            Verdict::Unstable
        } else if a < -MARGINAL_BAND {
            Verdict::Stable
        } else {
            Verdict::Marginal
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub beta: f64,
    pub point: Valuations,
    pub residual: f64,
    #[serde(skip)]
    pub jacobian: JacobianMatrix,
    pub eigenvalues: Vec<Eigenvalue>,
    pub spectral_abscissa: f64,
    pub verdict: Verdict,
    pub gershgorin: Vec<Disc>,
    pub discs_cover_spectrum: bool,
    pub cooperative: bool,
    pub irreducible: bool,
    pub row_sum_defect: f64,
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// Stability report at `v`. Warns when `v` is not an equilibrium.
pub fn report(v: &[f64], t: &ReducedTree, beta: f64) -> Result<StabilityReport> {
    let jac = jacobian(v, t, beta)?;
    let residual = sup_norm(&mean_field_rhs(v, t, beta));
    if residual > 1e-8 {
        log::warn!("stability report at a point with residual {residual:e}");
    }
    let eig = eigenvalues(&jac.matrix)?;
    let spectral_abscissa = eig[0].re;
    let discs = gershgorin(&jac.matrix);
    Ok(StabilityReport {
        beta,
        point: Valuations::from(v),
        residual,
        eigenvalues: eig.clone(),
        spectral_abscissa,
        verdict: Verdict::from_abscissa(spectral_abscissa),
        discs_cover_spectrum: discs_cover(&discs, &eig, 1e-8),
        gershgorin: discs,
        cooperative: is_cooperative(&jac.matrix),
        irreducible: is_irreducible(&jac.matrix, IRREDUCIBLE_THRESHOLD),
        row_sum_defect: row_sum_defect(&jac.matrix),
        jacobian: jac,
    })
}

/// Sign structure of the Jacobian over sampled points of the payoff box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CooperativeProbe {
    pub points: usize,
    pub min_offdiagonal: f64,
    pub max_abscissa: f64,
    pub all_cooperative: bool,
}

/// Evaluates the Jacobian at the box vertices and `samples` seeded random
/// interior points.
pub fn probe_cooperative(t: &ReducedTree, beta: f64, samples: usize, seed: u64) -> Result<CooperativeProbe> {
    let bx = t.payoff_box();
    let n = t.n_classes();
    let mut points: Vec<Vec<f64>> = Vec::new();
    if n <= 10 {
        for mask in 0..(1usize << n) {
            points.push((0..n).map(|s| if mask >> s & 1 == 1 { bx.hi[s] } else { bx.lo[s] }).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        points.push((0..n).map(|s| bx.lo[s] + rng.gen::<f64>() * (bx.hi[s] - bx.lo[s])).collect());
    }
    let mut min_off = f64::INFINITY;
    let mut max_abs = f64::NEG_INFINITY;
    let mut all = true;
    for p in &points {
        let j = jacobian(p, t, beta)?.matrix;
        for s in 0..n {
            for k in 0..n {
                if s != k {
                    min_off = min_off.min(j[(s, k)]);
                }
            }
        }
        all &= is_cooperative(&j);
        max_abs = max_abs.max(eigenvalues(&j)?[0].re);
    }
    Ok(CooperativeProbe {
        points: points.len(),
        min_offdiagonal: min_off,
        max_abscissa: max_abs,
        all_cooperative: all,
    })
}

/// Smallest shift in `zs` (scanned in increasing order) from which every
/// larger scanned shift makes the Jacobian cooperative on all probed points.
/// There is no closed form for this threshold, so it is located empirically.
pub fn probe_z_threshold(
    t: &ReducedTree,
    beta: f64,
    zs: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Option<f64>> {
    let mut zs = zs.to_vec();
    zs.sort_by(f64::total_cmp);
    let mut threshold = None;
    for &z in zs.iter().rev() {
        if probe_cooperative(&t.shift_unary_payoffs(z), beta, samples, seed)?.all_cooperative {
            threshold = Some(z);
        } else {
            break;
        }
    }
    Ok(threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn beta_zero_is_minus_identity() {
        let t = fixtures::uniform_three_class(&[0.1, 0.2, 0.3], &[0.5; 6], &[0.7; 3]);
        let j = jacobian(&[0.3, 0.9, -2.0], &t, 0.0).unwrap();
        assert_eq!(j.matrix, -DMatrix::<f64>::identity(3, 3));
        assert_eq!(row_sum_defect(&j.matrix), 0.0);
    }

    #[test]
    fn mixed_equilibrium_is_unstable() {
        // At the exact β = ∞ mixed point the finite-β fixed point is close;
        // the saddle has one clearly positive eigenvalue already.
        let t = fixtures::multiplicity_tree();
        let x = 1.0 - 1.0 / 3f64.sqrt();
        let r = report(&[x, x], &t, 50.0).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert!(r.discs_cover_spectrum);
    }

    #[test]
    fn pure_equilibrium_is_stable() {
        let t = fixtures::multiplicity_tree();
        let r = report(&[1.0, 0.0], &t, 50.0).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);
        assert!(r.row_sum_defect < 1e-12);
    }

    #[test]
    fn irreducibility() {
        let m = DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0]);
        assert!(is_irreducible(&m, 1e-12));
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        assert!(!is_irreducible(&m, 1e-12));
        assert!(!is_cooperative(&m));
    }

    #[test]
    fn json_shape() {
        let t = fixtures::unique_mixed_tree();
        let x = 2.0 + 1.0 / 3f64.sqrt();
        let r = report(&[x, x], &t, 50.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["eigenvalues", "spectral_abscissa", "verdict", "gershgorin", "cooperative", "irreducible", "row_sum_defect"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["eigenvalues"][0].as_array().unwrap().len(), 2);
        assert_eq!(v["verdict"], "stable");
    }

    #[test]
    fn threshold_probe_on_two_class_tree() {
        let t = fixtures::multiplicity_tree();
        let z = probe_z_threshold(&t, 5.0, &[0.0, 1.0, 2.0, 3.0, 4.0], 50, 1).unwrap();
        assert!(z.is_some_and(|z| z > 0.0));
    }
}
