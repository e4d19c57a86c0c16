//! Dense symmetric eigendecomposition and small vector helpers.
//!
//! The eigensolver is the classic Householder tridiagonalization followed
//! by implicit-shift QL with eigenvector accumulation.  It handles tightly
//! clustered and exactly degenerate spectra, which show up constantly here
//! (restarted Ritz blocks, symmetric cross sections), and it is
//! deterministic across runs.

use nalgebra::{DMatrix, DVector};

/// Eigenvalues ascending with matching orthonormal eigenvector columns.
pub fn sym_eigh_ascending(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return (vec![], DMatrix::zeros(0, 0));
    }
    let mut z = m.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut d, &mut e, &mut z).expect("QL iteration failed to converge");
    // sort ascending, reorder columns
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &z.column(src));
    }
    (vals, vecs)
}

/// Householder reduction of a real symmetric matrix to tridiagonal form
/// with accumulated transformations (EISPACK `tred2`).
fn tred2(a: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = a.nrows();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut ff = 0.0;
                for j in 0..=l {
                    a[(j, i)] = a[(i, j)] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[(j, k)] * a[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g / h;
                    ff += e[j] * a[(i, j)];
                }
                let hh = ff / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[(j, k)] -= f * e[k] + g * a[(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[(i, k)] * a[(k, j)];
                }
                for k in 0..i {
                    a[(k, j)] -= g * a[(k, i)];
                }
            }
        }
        d[i] = a[(i, i)];
        a[(i, i)] = 1.0;
        for j in 0..i {
            a[(j, i)] = 0.0;
            a[(i, j)] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix with
/// eigenvector accumulation (EISPACK `tql2`).
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) -> Result<(), ()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(());
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            // shift with the sign convention g + sign(r, g)
            g = d[m] - d[l] + e[l] / (if g >= 0.0 { g + r } else { g - r });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if r == 0.0 && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Smallest eigenpairs of the pencil (A, M) with M diagonal positive,
/// restricted to `{x : C^T x = 0}`; dense exact path for small problems.
pub fn dense_pencil_smallest(
    a: &DMatrix<f64>,
    m_diag: &[f64],
    constraints: &[Vec<f64>],
    k: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.nrows();
    let s: Vec<f64> = m_diag.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let mut b = a.clone();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] *= s[i] * s[j];
        }
    }
    // Orthonormal basis of the admissible subspace {x : C^T x = 0}.
    let basis = if constraints.is_empty() {
        DMatrix::identity(n, n)
    } else {
        let p = constraints.len();
        let mut c = DMatrix::zeros(n, p);
        for (j, col) in constraints.iter().enumerate() {
            for i in 0..n {
                c[(i, j)] = col[i] * s[i];
            }
        }
        let gram = c.transpose() * &c;
        let gi = gram
            .try_inverse()
            .expect("constraint columns must be independent");
        let proj = &c * gi * c.transpose();
        let (vals, vecs) = sym_eigh_ascending(&(DMatrix::identity(n, n) - proj));
        let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
        let mut w = DMatrix::zeros(n, keep.len());
        for (dst, &src) in keep.iter().enumerate() {
            w.set_column(dst, &vecs.column(src));
        }
        w
    };
    let bv = basis.transpose() * &b * &basis;
    let (vals, vecs) = sym_eigh_ascending(&bv);
    let kk = k.min(vals.len());
    let mut out_vecs = Vec::with_capacity(kk);
    for j in 0..kk {
        let xj = &basis * vecs.column(j);
        let mut psi: Vec<f64> = (0..n).map(|i| s[i] * xj[i]).collect();
        let nrm = psi
            .iter()
            .zip(m_diag)
            .map(|(x, m)| x * x * m)
            .sum::<f64>()
            .sqrt();
        psi.iter_mut().for_each(|x| *x /= nrm);
        out_vecs.push(psi);
    }
    (vals[..kk].to_vec(), out_vecs)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weighted inner product `sum_i a_i b_i w_i`.
pub fn dot_weighted(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), m)| x * y * m).sum()
}

pub fn as_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn eigh_recovers_random_symmetric() {
        let n = 40;
        let mut rng = SplitMix64::new(11);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.next_sym();
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let (vals, vecs) = sym_eigh_ascending(&a);
        // A V = V diag(vals), V orthonormal
        let av = &a * &vecs;
        for j in 0..n {
            let col = av.column(j) - vals[j] * vecs.column(j);
            assert!(col.norm() < 1e-10 * vals[j].abs().max(1.0), "mode {j}");
        }
        let vtv = vecs.transpose() * &vecs;
        assert!((vtv - DMatrix::identity(n, n)).norm() < 1e-10);
        for j in 1..n {
            assert!(vals[j] >= vals[j - 1]);
        }
    }

    #[test]
    fn eigh_handles_degenerate_clusters() {
        // diag(1, 1, 1, 2, 2, 5) conjugated by a rotation
        let d = [1.0, 1.0, 1.0, 2.0, 2.0, 5.0];
        let n = d.len();
        let mut rng = SplitMix64::new(3);
        let mut q = DMatrix::from_fn(n, n, |_, _| rng.next_gauss());
        let qr = q.clone().qr();
        q = qr.q();
        let mut dm = DMatrix::zeros(n, n);
        for i in 0..n {
            dm[(i, i)] = d[i];
        }
        let a = &q * dm * q.transpose();
        let (vals, vecs) = sym_eigh_ascending(&a);
        for i in 0..n {
            assert!((vals[i] - d[i]).abs() < 1e-12, "{} vs {}", vals[i], d[i]);
        }
        let vtv = vecs.transpose() * &vecs;
        assert!((vtv - DMatrix::identity(n, n)).norm() < 1e-10);
    }

    #[test]
    fn eigh_near_diagonal_clustered() {
        // the restart pattern that defeated the previous implementation:
        // nearly diagonal, eigenvalues almost identical
        let n = 60;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 0.15 + 1e-12 * i as f64;
        }
        let mut rng = SplitMix64::new(9);
        for i in 0..n {
            for j in 0..i {
                let v = 1e-14 * rng.next_sym();
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let (vals, vecs) = sym_eigh_ascending(&a);
        assert!(vals.iter().all(|x| x.is_finite()));
        assert!(vecs.iter().all(|x| x.is_finite()));
        for v in &vals {
            assert!((v - 0.15).abs() < 1e-9);
        }
    }
}
