//! Symmetric tridiagonal eigensolver: Sturm bisection for selected
//! eigenvalues, inverse iteration for eigenvectors.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// Sub/super-diagonal, length `n - 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.n();
        let safe = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0usize;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let e2 = self.off[i - 1] * self.off[i - 1];
            let qp = if q.abs() < safe {
                if q < 0.0 {
                    -safe
                } else {
                    safe
                }
            } else {
                q
            };
            q = self.diag[i] - x - e2 / qp;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k` smallest eigenvalues by bisection, each to near machine
    /// precision relative to the spectral scale.
    pub fn smallest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let n = self.n();
        let k = k.min(n);
        let (glo, ghi) = self.gershgorin();
        let scale = ghi.abs().max(glo.abs()).max(1.0);
        let mut vals = Vec::with_capacity(k);
        for j in 0..k {
            let mut lo = glo;
            let mut hi = ghi;
            // invariant: count_below(lo) <= j < count_below(hi)
            for _ in 0..128 {
                let mid = 0.5 * (lo + hi);
                if self.count_below(mid) > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 4.0 * f64::EPSILON * scale {
                    break;
                }
            }
            vals.push(0.5 * (lo + hi));
        }
        vals
    }

    /// Inverse iteration for the eigenvector at `lambda`; orthogonalizes
    /// against `prior` to keep near-degenerate vectors independent.
    pub fn eigenvector(&self, lambda: f64, prior: &[Vec<f64>], seed: u64) -> Result<Vec<f64>> {
        let n = self.n();
        let mut rng = SplitMix64::new(seed ^ 0x9e37);
        let mut v: Vec<f64> = (0..n).map(|_| rng.next_sym()).collect();
        normalize(&mut v);
        let mut last_norm = 0.0;
        for _ in 0..8 {
            let mut w = v.clone();
            self.solve_shifted(lambda, &mut w)?;
            for q in prior {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            last_norm = norm(&w);
            if !last_norm.is_finite() || last_norm == 0.0 {
                return Err(Error::NonConvergent("inverse iteration breakdown".into()));
            }
            w.iter_mut().for_each(|x| *x /= last_norm);
            v = w;
            // growth ~ 1/|residual|; stop once the iterate is converged
            if last_norm > 1.0 / (1e-13 * self.gershgorin().1.abs().max(1.0)) {
                break;
            }
        }
        let _ = last_norm;
        // deterministic sign: largest-magnitude entry positive
        fix_sign(&mut v);
        Ok(v)
    }

    /// Solve (T - lambda I) x = b in place by Gaussian elimination with
    /// partial pivoting between adjacent rows (fill width 2).
    fn solve_shifted(&self, lambda: f64, b: &mut [f64]) -> Result<()> {
        let n = self.n();
        if n == 1 {
            let d = self.diag[0] - lambda;
            let d = if d.abs() < 1e-300 { 1e-300 } else { d };
            b[0] /= d;
            return Ok(());
        }
        // Working rows carry (diag, super, super2); `sub[i]` is the entry
        // below pivot i before elimination.
        let mut d: Vec<f64> = self.diag.iter().map(|&x| x - lambda).collect();
        let mut e: Vec<f64> = self.off.clone();
        let mut f = vec![0.0; n];
        let mut sub: Vec<f64> = self.off.clone();
        for i in 0..n - 1 {
            if sub[i].abs() > d[i].abs() {
                // Swap rows i and i+1. Before the swap:
                //   row i   = (d[i]   at col i, e[i]   at col i+1, 0       at col i+2)
                //   row i+1 = (sub[i] at col i, d[i+1] at col i+1, e[i+1]  at col i+2)
                let old_di = d[i];
                let old_ei = e[i];
                d[i] = sub[i];
                e[i] = d[i + 1];
                f[i] = if i + 1 < n - 1 { e[i + 1] } else { 0.0 };
                sub[i] = old_di;
                d[i + 1] = old_ei;
                if i + 1 < n - 1 {
                    e[i + 1] = 0.0;
                }
                b.swap(i, i + 1);
            }
            let piv = if d[i].abs() < 1e-300 {
                1e-300_f64.copysign(d[i])
            } else {
                d[i]
            };
            let m = sub[i] / piv;
            d[i + 1] -= m * e[i];
            if i + 1 < n - 1 {
                e[i + 1] -= m * f[i];
            }
            b[i + 1] -= m * b[i];
        }
        // back substitution
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= e[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= f[i] * b[i + 2];
            }
            let piv = if d[i].abs() < 1e-300 {
                1e-300_f64.copysign(d[i])
            } else {
                d[i]
            };
            b[i] = acc / piv;
        }
        Ok(())
    }

    /// Lowest `k` eigenpairs; vectors have unit Euclidean norm.
    pub fn smallest_eigenpairs(&self, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let vals = self.smallest_eigenvalues(k);
        let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(vals.len());
        for (j, &lam) in vals.iter().enumerate() {
            // hand the iteration only the neighbors close enough to matter
            let close: Vec<Vec<f64>> = vals[..j]
                .iter()
                .zip(&vecs)
                .filter(|(l, _)| (*l - lam).abs() < 1e-6 * lam.abs().max(1.0))
                .map(|(_, v)| v.clone())
                .collect();
            let v = self.eigenvector(lam, &close, j as u64)?;
            vecs.push(v);
        }
        Ok((vals, vecs))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
}

fn fix_sign(v: &mut [f64]) {
    let mut imax = 0;
    let mut best = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn particle_in_a_box_eigenvalues() {
        // -u'' on (0,1), Dirichlet: discrete eigenvalues are
        // (2/h^2)(1 - cos(j pi h)), converging to (j pi)^2.
        let n = 999;
        let h = 1.0 / (n as f64 + 1.0);
        let t = SymTridiag::new(vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1]);
        let vals = t.smallest_eigenvalues(3);
        for j in 1..=3usize {
            let exact = (2.0 / (h * h)) * (1.0 - (j as f64 * PI * h).cos());
            assert!(
                (vals[j - 1] - exact).abs() < 1e-9 * exact,
                "{} vs {}",
                vals[j - 1],
                exact
            );
            let cont = (j as f64 * PI).powi(2);
            assert!((vals[j - 1] - cont).abs() < 2e-4 * cont);
        }
    }

    #[test]
    fn eigenpairs_residual_and_orthogonality() {
        let n = 500;
        let h = 1.0 / (n as f64 + 1.0);
        let mut diag = vec![2.0 / (h * h); n];
        for (i, d) in diag.iter_mut().enumerate() {
            let s = (i + 1) as f64 * h;
            *d += -30.0 * (-((s - 0.5) / 0.1).powi(2)).exp(); // a potential well
        }
        let t = SymTridiag::new(diag, vec![-1.0 / (h * h); n - 1]);
        let (vals, vecs) = t.smallest_eigenpairs(4).unwrap();
        for j in 0..4 {
            let r = t.matvec(&vecs[j]);
            let res: f64 = r
                .iter()
                .zip(&vecs[j])
                .map(|(a, v)| (a - vals[j] * v).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-8 * vals[j].abs().max(1.0), "residual {res}");
            for i in 0..j {
                assert!(dot(&vecs[i], &vecs[j]).abs() < 1e-8);
            }
        }
        assert!(vals[0] < 0.0, "well should bind: {}", vals[0]);
    }
}
