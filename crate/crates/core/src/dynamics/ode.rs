use super::policy::mean_field_rhs;
use super::{Trajectory, Valuations};
use crate::error::{CpalError, Result};
use crate::tree::ReducedTree;

fn axpy(v: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    v.iter().zip(d).map(|(x, y)| x + a * y).collect()
}

/// Classical fixed-step RK4 for `v' = g(v) - v` from `t = 0` to `t_end`.
/// The last step is shortened to land exactly on `t_end`. Every step is
/// recorded.
pub fn integrate(
    v0: &[f64],
    t: &ReducedTree,
    beta: f64,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(CpalError::validation(format!("step size {h} must be positive")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(CpalError::validation(format!("end time {t_end} must be >= 0")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(CpalError::validation(format!("beta {beta} must be finite and >= 0")));
    }
    if v0.len() != t.n_classes() || v0.iter().any(|x| !x.is_finite()) {
        return Err(CpalError::validation("initial valuations must be finite, one per class"));
    }
    let f = |v: &[f64]| mean_field_rhs(v, t, beta);

    let mut n = (t_end / h).ceil() as usize;
    if n > 0 && t_end - (n - 1) as f64 * h <= 1e-9 * h {
        n -= 1;
    }
    let mut traj = Trajectory {
        times: Vec::with_capacity(n + 1),
        snapshots: Vec::with_capacity(n + 1),
        events: Vec::new(),
    };
    let mut v = v0.to_vec();
    traj.times.push(0.0);
    traj.snapshots.push(Valuations(v.clone()));
    for i in 0..n {
        let t0 = i as f64 * h;
        let t1 = if i + 1 == n { t_end } else { (i + 1) as f64 * h };
        let dt = t1 - t0;
        let k1 = f(&v);
        let k2 = f(&axpy(&v, dt / 2.0, &k1));
        let k3 = f(&axpy(&v, dt / 2.0, &k2));
        let k4 = f(&axpy(&v, dt, &k3));
        for s in 0..v.len() {
            v[s] += dt / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CpalError::Numeric(format!("non-finite state at t = {t1}")));
        }
        traj.times.push(t1);
        traj.snapshots.push(Valuations(v.clone()));
    }
    Ok(traj)
}
