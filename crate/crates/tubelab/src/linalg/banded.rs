//! Symmetric banded matrices with an in-place LDL^T factorization.
//!
//! Lower storage, row-major: row `i` keeps entries `A[i, i-bw ..= i]` in a
//! strip of width `bw + 1`, diagonal last.  The factorization tolerates
//! indefinite matrices (no pivoting; pivot magnitudes are monitored and a
//! breakdown is reported to the caller so it can perturb the shift).

use crate::error::{Error, Result};

/// Symmetric banded matrix, lower half stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

/// LDL^T factor of a `SymBanded`; same layout, D on the diagonal slots.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    d: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Accumulate `v` into `A[i, j]` (and by symmetry `A[j, i]`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(hi, lo);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            return 0.0;
        }
        self.data[self.idx(hi, lo)]
    }

    /// `A <- A + sigma * I`.
    pub fn shift_diag(&mut self, sigma: f64) {
        for i in 0..self.n {
            let k = i * (self.bw + 1) + self.bw;
            self.data[k] += sigma;
        }
    }

    /// Congruence scaling `A <- diag(s) A diag(s)`.
    pub fn scale_sym(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let k = self.idx(i, j);
                self.data[k] *= s[i] * s[j];
            }
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * w..(i + 1) * w];
            let xi = x[i];
            let mut acc = row[self.bw] * xi;
            for j in lo..i {
                let v = row[self.bw - (i - j)];
                acc += v * x[j];
                y[j] += v * xi;
            }
            y[i] += acc;
        }
    }

    /// x^T A x, without forming A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        let w = self.bw + 1;
        let mut total = 0.0;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * w..(i + 1) * w];
            let xi = x[i];
            let mut off = 0.0;
            for j in lo..i {
                off += row[self.bw - (i - j)] * x[j];
            }
            total += xi * (row[self.bw] * xi + 2.0 * off);
        }
        total
    }

    /// x^T A y for distinct vectors.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut ay = vec![0.0; self.n];
        self.matvec(y, &mut ay);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    /// Largest |diagonal| entry, used to scale pivot tolerances.
    pub fn diag_scale(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * (self.bw + 1) + self.bw].abs())
            .fold(0.0, f64::max)
    }

    /// Dense copy (tests and small fallback paths).
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let v = self.data[self.idx(i, j)];
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// In-place LDL^T.  Consumes the matrix; fails on tiny pivots (the
    /// caller perturbs the shift and retries).
    pub fn factor_ldl(mut self) -> Result<LdlFactor> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let scale = self.diag_scale().max(f64::MIN_POSITIVE);
        let pivot_tol = 1e-14 * scale;
        let mut d = vec![0.0; n];
        let mut wbuf = vec![0.0; bw]; // l_jk * d_k over the active window

        for j in 0..n {
            let lo_j = j.saturating_sub(bw);
            let mut dj = self.data[j * w + bw];
            for k in lo_j..j {
                let ljk = self.data[j * w + bw - (j - k)];
                let t = ljk * d[k];
                wbuf[k - lo_j] = t;
                dj -= ljk * t;
            }
            if dj.abs() < pivot_tol {
                return Err(Error::NonConvergent(format!(
                    "LDL^T pivot breakdown at row {j} (|d| = {:.3e}, scale = {:.3e})",
                    dj.abs(),
                    scale
                )));
            }
            d[j] = dj;
            self.data[j * w + bw] = dj;
            let inv = 1.0 / dj;
            let imax = (j + bw).min(n - 1);
            for i in (j + 1)..=imax {
                let lo_i = i.saturating_sub(bw);
                let k0 = lo_i.max(lo_j);
                let mut s = self.data[i * w + bw - (i - j)];
                let row_i = &self.data[i * w..(i + 1) * w];
                // index of column k inside row_i is bw - i + k; computed with
                // wrapping arithmetic since bw < i is common, k0 >= i - bw
                // keeps the final index in range
                let base = bw.wrapping_sub(i);
                for k in k0..j {
                    s -= row_i[base.wrapping_add(k)] * wbuf[k - lo_j];
                }
                self.data[i * w + bw - (i - j)] = s * inv;
            }
        }
        Ok(LdlFactor {
            n,
            bw,
            data: self.data,
            d,
        })
    }
}

impl LdlFactor {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of negative pivots = number of eigenvalues below the shift
    /// (Sylvester inertia), a useful eigenvalue-count cross-check.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let w = self.bw + 1;
        // L y = b
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = b[i];
            for j in lo..i {
                acc -= row[self.bw - (i - j)] * b[j];
            }
            b[i] = acc;
        }
        // D z = y
        for i in 0..self.n {
            b[i] /= self.d[i];
        }
        // L^T x = z
        for i in (0..self.n).rev() {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * w..(i + 1) * w];
            let bi = b[i];
            for j in lo..i {
                b[j] -= row[self.bw - (i - j)] * bi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_banded(n: usize, bw: usize, seed: u64, spd: bool) -> SymBanded {
        let mut rng = SplitMix64::new(seed);
        let mut a = SymBanded::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                if i == j {
                    let boost = if spd { 4.0 * (bw as f64 + 1.0) } else { 0.5 };
                    a.add(i, i, boost + rng.next_sym());
                } else {
                    a.add(i, j, rng.next_sym());
                }
            }
        }
        a
    }

    #[test]
    fn matvec_matches_dense() {
        let a = random_banded(40, 5, 1, false);
        let dense = a.to_dense();
        let mut rng = SplitMix64::new(2);
        let x: Vec<f64> = (0..40).map(|_| rng.next_sym()).collect();
        let mut y = vec![0.0; 40];
        a.matvec(&x, &mut y);
        let xd = nalgebra::DVector::from_column_slice(&x);
        let yd = &dense * &xd;
        for i in 0..40 {
            assert!((y[i] - yd[i]).abs() < 1e-12);
        }
        let q = a.quad_form(&x);
        let qd = xd.dot(&yd);
        assert!((q - qd).abs() < 1e-10 * qd.abs().max(1.0));
    }

    #[test]
    fn ldl_solves_spd_system() {
        let a = random_banded(60, 7, 3, true);
        let dense = a.to_dense();
        let f = a.factor_ldl().unwrap();
        let mut rng = SplitMix64::new(4);
        let b: Vec<f64> = (0..60).map(|_| rng.next_sym()).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let xd = nalgebra::DVector::from_column_slice(&x);
        let r = &dense * &xd - nalgebra::DVector::from_column_slice(&b);
        assert!(r.norm() < 1e-9, "residual {}", r.norm());
    }

    #[test]
    fn ldl_edge_bandwidths() {
        // bw = 0: pure diagonal
        let mut d0 = SymBanded::zeros(20, 0);
        let mut rng = SplitMix64::new(21);
        let diag: Vec<f64> = (0..20).map(|_| 1.0 + rng.next_f64()).collect();
        for (i, &v) in diag.iter().enumerate() {
            d0.add(i, i, v);
        }
        let f = d0.factor_ldl().unwrap();
        let mut x = vec![1.0; 20];
        f.solve_in_place(&mut x);
        for i in 0..20 {
            assert!((x[i] - 1.0 / diag[i]).abs() < 1e-14);
        }
        // bw = n - 1: effectively dense
        let a = random_banded(30, 29, 22, true);
        let dense = a.to_dense();
        let fact = a.factor_ldl().unwrap();
        let mut rng2 = SplitMix64::new(23);
        let b: Vec<f64> = (0..30).map(|_| rng2.next_sym()).collect();
        let mut y = b.clone();
        fact.solve_in_place(&mut y);
        let r = &dense * nalgebra::DVector::from_column_slice(&y)
            - nalgebra::DVector::from_column_slice(&b);
        assert!(r.norm() < 1e-9 * dense.norm());
    }

    #[test]
    fn ldl_randomized_indefinite_sweep() {
        // many random shapes and interior shifts: residual and inertia
        // against the dense eigendecomposition
        let mut rng = SplitMix64::new(404);
        for trial in 0..50 {
            let n = 20 + (rng.next_u64() % 120) as usize;
            let bw = 1 + (rng.next_u64() % 9) as usize;
            let a = random_banded(n, bw.min(n - 1), 1000 + trial, true);
            let eigs = crate::linalg::dense::sym_eigh_ascending(&a.to_dense()).0;
            let cut = 1 + (rng.next_u64() as usize) % (n - 2);
            // midpoint of a spectral gap; skip near-degenerate picks
            if eigs[cut] - eigs[cut - 1] < 1e-6 {
                continue;
            }
            let sigma = 0.5 * (eigs[cut - 1] + eigs[cut]);
            let mut shifted = a.clone();
            shifted.shift_diag(-sigma);
            let f = shifted.factor_ldl().unwrap();
            assert_eq!(f.negative_pivots(), cut, "inertia mismatch (trial {trial})");
            let b: Vec<f64> = (0..n).map(|_| rng.next_sym()).collect();
            let mut x = b.clone();
            f.solve_in_place(&mut x);
            let mut ax = vec![0.0; n];
            a.matvec(&x, &mut ax);
            let res: f64 = ax
                .iter()
                .zip(&x)
                .zip(&b)
                .map(|((axi, xi), bi)| (axi - sigma * xi - bi).powi(2))
                .sum::<f64>()
                .sqrt();
            // fully pivot-free, so allow for moderate growth
            assert!(
                res < 1e-7 * (1.0 + f64::from(n as u32)),
                "residual {res} (trial {trial})"
            );
        }
    }

    #[test]
    fn ldl_handles_indefinite_shift() {
        // A - sigma I with sigma inside the spectrum still factors, and the
        // inertia counts the eigenvalues below the shift.
        let a = random_banded(50, 4, 9, true);
        let dense = a.to_dense();
        let eig = crate::linalg::dense::sym_eigh_ascending(&dense).0;
        let sigma = 0.5 * (eig[24] + eig[25]);
        let mut shifted = a.clone();
        shifted.shift_diag(-sigma);
        let f = shifted.factor_ldl().unwrap();
        assert_eq!(f.negative_pivots(), 25);
        let mut rng = SplitMix64::new(10);
        let b: Vec<f64> = (0..50).map(|_| rng.next_sym()).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let xd = nalgebra::DVector::from_column_slice(&x);
        let mut sd = dense.clone();
        for i in 0..50 {
            sd[(i, i)] -= sigma;
        }
        let r = &sd * &xd - nalgebra::DVector::from_column_slice(&b);
        assert!(r.norm() < 1e-8, "residual {}", r.norm());
    }
}
