//! The effective one-dimensional Schroedinger operator of a squeezed tube.
//!
//! Squeezing transfers the geometry into the potential
//!
//! `V_n(s) = (tau(s) - alpha'(s))^2 C_n - kappa(s)^2 / 4`
//!
//! acting on the curve: a repulsive twist term weighted by the section's
//! twist coefficient against the attractive curvature well.  The operator
//! `-d^2/ds^2 + V_n` is discretized with the same cell-centered 3-point
//! scheme as the section (Dirichlet walls at the interval ends), so tube
//! and effective spectra can be compared on matching grids.

use crate::cross_section::{laplacian_1d, TwistCoefficient};
use crate::error::{Error, Result};
use crate::geometry::CurveSpec;

/// Grid samples of the effective potential, with the inputs that built it.
#[derive(Debug, Clone)]
pub struct EffectivePotential {
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Twist coefficient used for the repulsive term.
    pub c_n: TwistCoefficient,
    /// Mode index the potential belongs to.
    pub mode: usize,
    /// Curvature samples, kept for the bend angle and the broken-line
    /// rescaling.
    pub kappa: Vec<f64>,
}

impl EffectivePotential {
    /// Trapezoid quadrature of the potential.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.s_grid, &self.values)
    }

    /// Trapezoid quadrature of |V|.
    pub fn l1_norm(&self) -> f64 {
        let absv: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        trapezoid(&self.s_grid, &absv)
    }

    /// Bend angle carried along from the curvature input.
    pub fn bend_angle(&self) -> f64 {
        trapezoid(&self.s_grid, &self.kappa)
    }

    /// Linear interpolation with zero extension outside the grid.
    pub fn value_at(&self, s: f64) -> f64 {
        let n = self.s_grid.len();
        if s <= self.s_grid[0] || s >= self.s_grid[n - 1] {
            return 0.0;
        }
        let h = self.s_grid[1] - self.s_grid[0];
        let pos = (s - self.s_grid[0]) / h;
        let i = (pos.floor() as usize).min(n - 2);
        let w = pos - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// CSV export `s,V`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,V\n");
        for (s, v) in self.s_grid.iter().zip(&self.values) {
            out.push_str(&format!("{s:.16e},{v:.16e}\n"));
        }
        out
    }

    /// Parse the CSV written by [`Self::to_csv`]; twist metadata is not
    /// stored in the file, so the result carries `C = 0`, mode 0 and zero
    /// curvature samples.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut s_grid = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || i == 0 && line.starts_with('s') {
                continue;
            }
            let mut parts = line.split(',');
            let (a, b) = (parts.next(), parts.next());
            match (a, b) {
                (Some(a), Some(b)) => {
                    s_grid.push(a.trim().parse().map_err(|_| {
                        Error::InvalidInput(format!("bad number on line {}", i + 1))
                    })?);
                    values.push(b.trim().parse().map_err(|_| {
                        Error::InvalidInput(format!("bad number on line {}", i + 1))
                    })?);
                }
                _ => return Err(Error::InvalidInput(format!("bad CSV line {}", i + 1))),
            }
        }
        if s_grid.len() < 2 {
            return Err(Error::InvalidInput(
                "potential CSV needs at least two rows".into(),
            ));
        }
        let n = s_grid.len();
        Ok(EffectivePotential {
            s_grid,
            values,
            c_n: TwistCoefficient { n: 0, value: 0.0 },
            mode: 0,
            kappa: vec![0.0; n],
        })
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
    acc
}

/// Assemble `V_n = (tau - alpha')^2 C_n - kappa^2/4` on the curve's grid.
///
/// Arbitrarily large twist rates are accepted as sampled; everything
/// downstream only ever sees the truncated-grid realization of the
/// operator, so growth at the ends shows up as a large potential, not as
/// a domain subtlety.
pub fn effective_potential(curve: &CurveSpec, cn: TwistCoefficient) -> EffectivePotential {
    let n = curve.len();
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let tw = curve.twist_at(i);
        let k = curve.kappa()[i];
        values.push(tw * tw * cn.value - 0.25 * k * k);
    }
    EffectivePotential {
        s_grid: curve.s_grid().to_vec(),
        values,
        c_n: cn,
        mode: cn.n,
        kappa: curve.kappa().to_vec(),
    }
}

/// Eigenpairs of the 1D operator on an interval with Dirichlet walls.
#[derive(Debug, Clone)]
pub struct Spectrum1D {
    /// Eigenvalues in increasing order.
    pub mu: Vec<f64>,
    /// Eigenfunctions, unit discrete L2 norm, on the cell-centered grid.
    pub w: Vec<Vec<f64>>,
    /// Cell centers of the discretization.
    pub grid: Vec<f64>,
    /// Interval the operator was realized on.
    pub interval: (f64, f64),
}

impl Spectrum1D {
    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// CSV export `j,mu_j`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,mu_j\n");
        for (j, m) in self.mu.iter().enumerate() {
            out.push_str(&format!("{j},{m:.16e}\n"));
        }
        out
    }
}

/// Lowest `j_max` Dirichlet eigenpairs of `-d^2/ds^2 + V` on the interval,
/// sampled at `n_cells` cell centers.
///
/// Modes whose discrete eigenvalue approaches the scheme's resolution
/// ceiling (half the grid's top eigenvalue) are refused.
pub fn schrodinger_eigen(
    pot: &EffectivePotential,
    interval: (f64, f64),
    n_cells: usize,
    j_max: usize,
) -> Result<Spectrum1D> {
    if j_max == 0 || n_cells < 3 {
        return Err(Error::InvalidInput(
            "need j_max >= 1 and at least 3 cells".into(),
        ));
    }
    if interval.1 <= interval.0 {
        return Err(Error::InvalidInput("empty interval".into()));
    }
    let h = (interval.1 - interval.0) / n_cells as f64;
    let grid: Vec<f64> = (0..n_cells)
        .map(|i| interval.0 + (i as f64 + 0.5) * h)
        .collect();
    let v: Vec<f64> = grid.iter().map(|&s| pot.value_at(s)).collect();
    let t = laplacian_1d(n_cells, h, &v);
    let (mu, w) = t.smallest_eigenpairs(j_max)?;
    // resolution guard: modes near the grid's top are unreliable
    let ceiling = 2.0 / (h * h);
    if let Some(&worst) = mu.last() {
        if worst > 0.5 * ceiling {
            return Err(Error::Resolution(format!(
                "mode {j_max} sits at {worst:.3e}, above half the grid ceiling {ceiling:.3e}; refine the grid"
            )));
        }
    }
    // unit discrete L2 norm (eigenvectors come Euclidean-normalized)
    let scale = 1.0 / h.sqrt();
    let w = w
        .into_iter()
        .map(|col| col.into_iter().map(|x| x * scale).collect())
        .collect();
    Ok(Spectrum1D {
        mu,
        w,
        grid,
        interval,
    })
}

/// Dirichlet truncation test for a bound state: lowest eigenvalue on
/// `(-R, R)`, accepted only when stable against doubling the radius.
///
/// Returns `(exists, lowest_eigenvalue_on_2R)`.
pub fn bound_state_exists(
    pot: &EffectivePotential,
    domain_halfwidth: f64,
    h: f64,
) -> Result<(bool, f64)> {
    let r = domain_halfwidth;
    if !(r > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidInput("bad truncation parameters".into()));
    }
    let tol = 1e-10;
    let solve = |rr: f64| -> Result<f64> {
        let n = ((2.0 * rr) / h).round().max(8.0) as usize;
        let spec = schrodinger_eigen(pot, (-rr, rr), n, 1)?;
        Ok(spec.mu[0])
    };
    let mu_r = solve(r)?;
    let mu_2r = solve(2.0 * r)?;
    let found_r = mu_r < -tol;
    let found_2r = mu_2r < -tol;
    if found_r != found_2r {
        return Err(Error::Inconclusive(r));
    }
    Ok((found_2r, mu_2r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::TwistCoefficient;
    use crate::geometry::presets;
    use std::f64::consts::PI;

    fn c(v: f64, n: usize) -> TwistCoefficient {
        TwistCoefficient { n, value: v }
    }

    #[test]
    fn potential_assembly_matches_formula() {
        // untwisted in the tau = alpha' sense: purely attractive
        let n = 101;
        let s: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let tau: Vec<f64> = s.iter().map(|x| 0.3 * x.sin()).collect();
        let kappa: Vec<f64> = s.iter().map(|x| 0.5 * x.cos()).collect();
        let curve = CurveSpec::new(
            s,
            kappa.clone(),
            tau.clone(),
            vec![0.0; n],
            Some(tau.clone()),
        )
        .unwrap();
        let pot = effective_potential(&curve, c(2.0, 0));
        for i in 0..n {
            assert_eq!(pot.values[i], -0.25 * kappa[i] * kappa[i]);
            assert!(pot.values[i] <= 0.0);
            assert!(pot.values[i] >= -0.25 * curve.sup_kappa().powi(2));
        }

        // straight twisted: constant positive potential
        let n2 = 11;
        let s2: Vec<f64> = (0..n2).map(|i| i as f64 * 0.1).collect();
        let curve2 = CurveSpec::new(
            s2,
            vec![0.0; n2],
            vec![0.7; n2],
            vec![0.0; n2],
            Some(vec![0.0; n2]),
        )
        .unwrap();
        let pot2 = effective_potential(&curve2, c(1.5, 1));
        for v in &pot2.values {
            assert!((v - 0.7 * 0.7 * 1.5).abs() < 1e-15);
        }

        // radial mode: twist drops out entirely
        let curve3 = presets::helix(0.8, 1.1, 2.0, 21);
        let pot3 = effective_potential(&curve3, c(0.0, 0));
        for (i, v) in pot3.values.iter().enumerate() {
            assert_eq!(*v, -0.25 * curve3.kappa()[i] * curve3.kappa()[i]);
        }
    }

    #[test]
    fn particle_in_a_box() {
        // V = 0 on (0,1): mu_j -> (j pi)^2, mu_1 ~ 9.8696
        let curve = presets::straight(1.0, 11);
        let pot = effective_potential(&curve, c(0.0, 0));
        let spec = schrodinger_eigen(&pot, (0.0, 1.0), 1000, 3).unwrap();
        for j in 1..=3usize {
            let exact = (j as f64 * PI).powi(2);
            assert!(
                (spec.mu[j - 1] - exact).abs() < 3e-5 * exact,
                "mu_{j} = {} vs {exact}",
                spec.mu[j - 1]
            );
        }
        assert!((spec.mu[0] - 9.8696).abs() < 1e-3);
    }

    #[test]
    fn constant_shift_identity() {
        // V -> V + c shifts every eigenvalue by exactly c in the discrete
        // scheme (same grid)
        let curve = presets::bump_curve(10.0, 5.0, 2.0, 1.0, 401);
        let pot = effective_potential(&curve, c(0.0, 0));
        let mut shifted = pot.clone();
        for v in &mut shifted.values {
            *v += 2.5;
        }
        let a = schrodinger_eigen(&pot, (0.0, 10.0), 400, 4).unwrap();
        let b = schrodinger_eigen(&shifted, (0.0, 10.0), 400, 4).unwrap();
        for j in 0..4 {
            assert!(
                ((b.mu[j] - a.mu[j]) - 2.5).abs() < 1e-9,
                "shift violated at mode {j}: {} vs {}",
                b.mu[j],
                a.mu[j]
            );
        }
    }

    #[test]
    fn curvature_bump_binds_a_state() {
        // compactly supported attractive well: at least one negative mode
        let curve = presets::bump_curve(2.0, 1.0, 0.9, 1.0, 401);
        let mut pot = effective_potential(&curve, c(0.0, 0));
        // re-center the support on 0 for the truncated-line solve
        for s in &mut pot.s_grid {
            *s -= 1.0;
        }
        let (found, mu0) = bound_state_exists(&pot, 20.0, 0.05).unwrap();
        assert!(found, "no bound state, mu0 = {mu0}");
        assert!(mu0 < 0.0);
    }

    #[test]
    fn positive_or_zero_potentials_do_not_bind() {
        let n = 41;
        let s: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * 0.05).collect();
        let bump: Vec<f64> = s.iter().map(|&x| presets::smooth_bump(x)).collect();
        let pot = EffectivePotential {
            s_grid: s.clone(),
            values: bump,
            c_n: c(1.0, 0),
            mode: 0,
            kappa: vec![0.0; n],
        };
        let (found, _) = bound_state_exists(&pot, 15.0, 0.05).unwrap();
        assert!(!found, "positive potential cannot bind");

        let zero = EffectivePotential {
            s_grid: s,
            values: vec![0.0; n],
            c_n: c(0.0, 0),
            mode: 0,
            kappa: vec![0.0; n],
        };
        let (found0, _) = bound_state_exists(&zero, 15.0, 0.05).unwrap();
        assert!(!found0);
    }

    #[test]
    fn marginal_well_is_reported_inconclusive() {
        // a well so shallow that (-R, R) shows no binding while (-2R, 2R)
        // does: the truncation test must refuse to answer
        let n = 201;
        let h = 2.0 / (n as f64 - 1.0);
        let s: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
        let v: Vec<f64> = s.iter().map(|&x| -0.1 * presets::smooth_bump(x)).collect();
        let pot = EffectivePotential {
            s_grid: s,
            values: v,
            c_n: c(0.0, 0),
            mode: 0,
            kappa: vec![0.0; n],
        };
        // sanity: the two truncations genuinely disagree
        let mu10 = schrodinger_eigen(&pot, (-10.0, 10.0), 400, 1).unwrap().mu[0];
        let mu20 = schrodinger_eigen(&pot, (-20.0, 20.0), 800, 1).unwrap().mu[0];
        assert!(
            mu10 > 0.0 && mu20 < 0.0,
            "witness drifted: {mu10:.3e}, {mu20:.3e}"
        );
        assert!(matches!(
            bound_state_exists(&pot, 10.0, 0.05),
            Err(Error::Inconclusive(_))
        ));
        // widening the window settles it
        let (found, mu) = bound_state_exists(&pot, 40.0, 0.05).unwrap();
        assert!(found && mu < 0.0);
    }

    #[test]
    fn negative_mode_count_is_grid_stable() {
        // the number of eigenvalues below zero must not move under h -> h/2
        let curve = presets::bump_curve(2.0, 1.0, 0.9, 1.5, 401);
        let mut pot = effective_potential(&curve, c(0.0, 0));
        for s in &mut pot.s_grid {
            *s -= 1.0;
        }
        let count_at = |n_cells: usize| -> usize {
            let spec = schrodinger_eigen(&pot, (-15.0, 15.0), n_cells, 6).unwrap();
            spec.mu.iter().filter(|&&m| m < 0.0).count()
        };
        let coarse = count_at(600);
        let fine = count_at(1200);
        assert_eq!(coarse, fine, "negative count moved: {coarse} -> {fine}");
        assert!(coarse >= 1);
    }

    #[test]
    fn dirichlet_bracketing_is_monotone_in_the_interval() {
        // enlarging the truncation interval never raises an eigenvalue
        let curve = presets::bump_curve(2.0, 1.0, 0.9, 1.2, 201);
        let mut pot = effective_potential(&curve, c(0.0, 0));
        for s in &mut pot.s_grid {
            *s -= 1.0;
        }
        let h = 0.05f64;
        let mut prev: Option<Vec<f64>> = None;
        for r in [5.0f64, 10.0, 20.0] {
            let n = ((2.0 * r) / h).round() as usize;
            let spec = schrodinger_eigen(&pot, (-r, r), n, 3).unwrap();
            if let Some(p) = prev {
                for j in 0..3 {
                    assert!(
                        spec.mu[j] <= p[j] + 1e-12,
                        "mode {j} grew when widening to R = {r}"
                    );
                }
            }
            prev = Some(spec.mu.clone());
        }
    }

    #[test]
    fn even_potential_gives_alternating_parity() {
        let curve = presets::bump_curve(2.0, 1.0, 0.9, 1.5, 201);
        let mut pot = effective_potential(&curve, c(0.0, 0));
        for s in &mut pot.s_grid {
            *s -= 1.0;
        }
        let n = 800; // even count: grid symmetric under s -> -s
        let spec = schrodinger_eigen(&pot, (-10.0, 10.0), n, 3).unwrap();
        for (j, w) in spec.w.iter().enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let mut worst = 0.0f64;
            for i in 0..n {
                worst = worst.max((w[i] - sign * w[n - 1 - i]).abs());
            }
            assert!(worst < 1e-6, "parity defect {worst} at mode {j}");
        }
    }

    #[test]
    fn eigen_residual_and_orthonormality() {
        let curve = presets::bump_curve(10.0, 5.0, 2.0, 1.0, 801);
        let pot = effective_potential(&curve, c(0.0, 0));
        let n = 700;
        let spec = schrodinger_eigen(&pot, (0.0, 10.0), n, 3).unwrap();
        let h = spec.spacing();
        let v: Vec<f64> = spec.grid.iter().map(|&s| pot.value_at(s)).collect();
        let t = laplacian_1d(n, h, &v);
        for j in 0..3 {
            let tw = t.matvec(&spec.w[j]);
            let res: f64 = tw
                .iter()
                .zip(&spec.w[j])
                .map(|(a, w)| (a - spec.mu[j] * w).powi(2))
                .sum::<f64>()
                .sqrt()
                * h.sqrt();
            assert!(res <= 1e-8 * spec.mu[j].abs().max(1.0), "residual {res}");
            for i in 0..=j {
                let ip: f64 = spec.w[i]
                    .iter()
                    .zip(&spec.w[j])
                    .map(|(a, b)| a * b * h)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn resolution_guard_trips() {
        let curve = presets::straight(1.0, 11);
        let pot = effective_potential(&curve, c(0.0, 0));
        // 12 cells cannot resolve 11 modes
        assert!(matches!(
            schrodinger_eigen(&pot, (0.0, 1.0), 12, 11),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn potential_csv_round_trip() {
        let curve = presets::bump_curve(4.0, 2.0, 1.0, 0.8, 21);
        let pot = effective_potential(&curve, c(0.3, 1));
        let text = pot.to_csv();
        let back = EffectivePotential::from_csv(&text).unwrap();
        assert_eq!(back.s_grid.len(), pot.s_grid.len());
        for i in 0..pot.s_grid.len() {
            assert_eq!(back.values[i], pot.values[i]);
        }
        assert!(EffectivePotential::from_csv("s,V\n0.0,1.0\n").is_err());
    }
}
