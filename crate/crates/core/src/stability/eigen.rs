//! Dense real eigenvalues: Householder reduction to upper Hessenberg form
//! followed by Francis double-shift QR.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CpalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "[f64; 2]")]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl From<Eigenvalue> for [f64; 2] {
    fn from(e: Eigenvalue) -> Self {
        [e.re, e.im]
    }
}

impl Eigenvalue {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in 0..n {
            let dot: f64 = (0..v.len()).map(|i| v[i] * a[(k + 1 + i, j)]).sum();
            let f = 2.0 * dot / vv;
            for i in 0..v.len() {
                a[(k + 1 + i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let dot: f64 = (0..v.len()).map(|j| a[(i, k + 1 + j)] * v[j]).sum();
            let f = 2.0 * dot / vv;
            for j in 0..v.len() {
                a[(i, k + 1 + j)] -= f * v[j];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of a square matrix, sorted by real part (then imaginary part)
/// in descending order.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Eigenvalue>> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(CpalError::validation("eigenvalues need a non-empty square matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(CpalError::Numeric("matrix has non-finite entries".into()));
    }
    let mut a = m.clone();
    hessenberg(&mut a);
    let mut out = vec![Eigenvalue { re: 0.0, im: 0.0 }; n];
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let max_sweeps = 100 * n * n;
    let mut sweeps = 0;
    let mut its = 0;
    let mut t = 0.0;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let nu = nn as usize;
        let mut l = 0;
        for ll in (1..=nu).rev() {
            let mut s = a[(ll - 1, ll - 1)].abs() + a[(ll, ll)].abs();
            if s == 0.0 {
                s = anorm;
            }
            if a[(ll, ll - 1)].abs() <= eps * s {
                a[(ll, ll - 1)] = 0.0;
                l = ll;
                break;
            }
        }
        let mut x = a[(nu, nu)];
        if l == nu {
            out[nu] = Eigenvalue { re: x + t, im: 0.0 };
            nn -= 1;
            its = 0;
            continue;
        }
        let mut y = a[(nu - 1, nu - 1)];
        let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
        if l == nu - 1 {
            let p = 0.5 * (y - x);
            let q = p * p + w;
            let mut z = q.abs().sqrt();
            x += t;
            if q >= 0.0 {
                z = p + sign(z, p);
                out[nu - 1] = Eigenvalue { re: x + z, im: 0.0 };
                out[nu] = Eigenvalue { re: if z != 0.0 { x - w / z } else { x + z }, im: 0.0 };
            } else {
                out[nu] = Eigenvalue { re: x + p, im: -z };
                out[nu - 1] = Eigenvalue { re: x + p, im: z };
            }
            nn -= 2;
            its = 0;
            continue;
        }
        if sweeps >= max_sweeps {
            return Err(CpalError::Numeric(format!(
                "QR iteration did not converge after {sweeps} sweeps"
            )));
        }
        if its > 0 && its % 10 == 0 {
            // Exceptional shift.
            t += x;
            for i in 0..=nu {
                a[(i, i)] -= x;
            }
            let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
            x = 0.75 * s;
            y = x;
            w = -0.4375 * s * s;
        }
        its += 1;
        sweeps += 1;

        let (mut p, mut q, mut r, mut z);
        let mut m = nu - 2;
        loop {
            z = a[(m, m)];
            let rr = x - z;
            let ss = y - z;
            p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
            q = a[(m + 1, m + 1)] - z - rr - ss;
            r = a[(m + 2, m + 1)];
            let s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
            let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
            if u <= eps * v {
                break;
            }
            m -= 1;
        }
        for i in m..nu - 1 {
            a[(i + 2, i)] = 0.0;
            if i != m {
                a[(i + 2, i - 1)] = 0.0;
            }
        }
        for k in m..nu {
            if k != m {
                p = a[(k, k - 1)];
                q = a[(k + 1, k - 1)];
                r = if k + 1 != nu { a[(k + 2, k - 1)] } else { 0.0 };
                x = p.abs() + q.abs() + r.abs();
                if x != 0.0 {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            let s = sign((p * p + q * q + r * r).sqrt(), p);
            if s == 0.0 {
                continue;
            }
            if k == m {
                if l != m {
                    a[(k, k - 1)] = -a[(k, k - 1)];
                }
            } else {
                a[(k, k - 1)] = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for j in k..=nu {
                let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                if k + 1 != nu {
                    pp += r * a[(k + 2, j)];
                    a[(k + 2, j)] -= pp * z;
                }
                a[(k + 1, j)] -= pp * y;
                a[(k, j)] -= pp * x;
            }
            let mmin = nu.min(k + 3);
            for i in l..=mmin {
                let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                if k + 1 != nu {
                    pp += z * a[(i, k + 2)];
                    a[(i, k + 2)] -= pp * r;
                }
                a[(i, k + 1)] -= pp * q;
                a[(i, k)] -= pp;
            }
        }
    }
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(out)
}
