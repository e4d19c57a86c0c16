//! The regularized quadratic form of the squeezed tube.
//!
//! On the fixed domain `[0, L] x S` with the weight
//! `beta = 1 - eps kappa (y . z_alpha)`, the sector-`n` form reads
//!
//! ```text
//! b_n(psi) = int  (1/beta) |d_s psi + (tau - alpha')(-y2 d_1 + y1 d_2) psi|^2
//!          +      (beta/eps^2) (|grad_perp psi|^2 - lambda_n |psi|^2)
//! ```
//!
//! with the weighted inner product `<psi, phi> = int beta psi phi`.  The
//! discretization is a tensor product of the cell-centered section mesh
//! and cell-centered s-cells whose interfaces are the curve's sample
//! nodes: the s-derivative lives on interfaces, the transverse gradient
//! is averaged onto them with centered differences and zero extension,
//! and both choices together make the straight-tube pencil separate
//! *exactly* into (1D Dirichlet cells) + (section pencil - lambda_n)/eps^2.
//!
//! For sectors `n >= 1` the pencil is unbounded below (every lower mode
//! contributes a `-(lambda_n - lambda_m)/eps^2` branch); eigensolves then
//! require the [`SectorProjector`], which removes `w(s) u_m(y)` for all
//! `m < n` slab by slab.

use rayon::prelude::*;

use crate::cross_section::{CrossSectionMesh, EigenPair, SectionSpectrum};
use crate::effective_operator::Spectrum1D;
use crate::error::{Error, Result};
use crate::geometry::{validate_tube, CurveSpec};
use crate::linalg::banded::SymBanded;
use crate::linalg::subspace::{banded_smallest, ShiftInvertOpts};

/// Discretized sector form: banded stiffness plus diagonal weighted mass.
#[derive(Debug, Clone)]
pub struct TubeFormAssembly {
    pub stiffness: SymBanded,
    /// Diagonal of the weighted mass (the `beta`-inner product).
    pub mass: Vec<f64>,
    pub eps: f64,
    /// Sector index `n`.
    pub sector: usize,
    /// Discrete section eigenvalue subtracted in the form.
    pub lambda_n: f64,
    /// Number of s-cells; interfaces are the curve nodes.
    pub n_s: usize,
    pub h_s: f64,
    /// Cell centers along the curve.
    pub s_centers: Vec<f64>,
    /// Nodes per section slab.
    pub section_nodes: usize,
    /// Unweighted quadrature weight per node (`h_s * cell`).
    pub node_measure: f64,
    /// `sup |kappa|` of the generating curve.
    pub sup_kappa: f64,
}

impl TubeFormAssembly {
    #[inline]
    pub fn node_count(&self) -> usize {
        self.n_s * self.section_nodes
    }

    /// Value of the form on a nodal vector.
    pub fn form_value(&self, psi: &[f64]) -> f64 {
        self.stiffness.quad_form(psi)
    }

    /// Weighted squared norm `|psi|_eps^2`.
    pub fn weighted_norm_sq(&self, psi: &[f64]) -> f64 {
        psi.iter().zip(&self.mass).map(|(x, m)| x * x * m).sum()
    }

    /// Unweighted squared norm in the discrete `L^2([0,L] x S)`.
    pub fn plain_norm_sq(&self, psi: &[f64]) -> f64 {
        psi.iter().map(|x| x * x).sum::<f64>() * self.node_measure
    }
}

/// Transverse gradient convention of the assembly: centered differences
/// with zero extension beyond the section boundary.  The summation-by-
/// parts identity `sum u (-y2 d1 + y1 d2) u = 0` holds exactly in this
/// convention, which is what decouples the sectors at the discrete level.
pub fn angular_derivative_zero_ext(mesh: &CrossSectionMesh, u: &[f64], p: usize) -> f64 {
    let c = mesh.coords()[p];
    let up = |q: Option<usize>| q.map_or(0.0, |i| u[i]);
    let dx = (up(mesh.neighbor(p, 1, 0)) - up(mesh.neighbor(p, -1, 0))) / (2.0 * mesh.hx());
    let dy = (up(mesh.neighbor(p, 0, 1)) - up(mesh.neighbor(p, 0, -1))) / (2.0 * mesh.hy());
    -c[1] * dx + c[0] * dy
}

/// Twist quadrature in the assembly's own convention,
/// `sum_p |(-y2 d1 + y1 d2) u|^2 cell`; the effective 1D comparison
/// operator of a confinement study uses this value so that the squeezed
/// limit of the discrete pencil matches the discrete 1D operator.
pub fn assembly_twist_quadrature(mesh: &CrossSectionMesh, u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for p in 0..mesh.node_count() {
        let a = angular_derivative_zero_ext(mesh, u, p);
        acc += a * a;
    }
    acc * mesh.cell()
}

/// Deflation data for sector `n`: the lower section modes, removed slab by
/// slab.
#[derive(Debug, Clone)]
pub struct SectorProjector {
    pub n: usize,
    pub basis: Vec<Vec<f64>>,
}

impl SectorProjector {
    /// Collect `u_0 .. u_{n-1}` from the section spectrum.
    pub fn new(spectrum: &SectionSpectrum, n: usize) -> Result<Self> {
        if spectrum.pairs.len() < n {
            return Err(Error::InvalidInput(format!(
                "sector projector for n = {n} needs the first {n} section modes, got {}",
                spectrum.pairs.len()
            )));
        }
        Ok(Self {
            n,
            basis: spectrum.pairs[..n].iter().map(|p| p.u.clone()).collect(),
        })
    }

    /// Apply the orthogonal projection onto the complement of the lower
    /// sectors (unweighted inner product), in place.
    pub fn project(&self, asm_nodes_per_slab: usize, n_s: usize, psi: &mut [f64]) {
        let ny = asm_nodes_per_slab;
        for b in &self.basis {
            let norm2: f64 = b.iter().map(|x| x * x).sum();
            for slab in 0..n_s {
                let seg = &mut psi[slab * ny..(slab + 1) * ny];
                let coef: f64 = seg.iter().zip(b).map(|(x, u)| x * u).sum::<f64>() / norm2;
                seg.iter_mut().zip(b).for_each(|(x, u)| *x -= coef * u);
            }
        }
    }

    /// Constraint vectors for the eigensolver: one per slab and lower mode.
    fn constraints(&self, ny: usize, n_s: usize) -> Vec<Vec<f64>> {
        let total = ny * n_s;
        let mut cons = Vec::with_capacity(self.basis.len() * n_s);
        for b in &self.basis {
            for slab in 0..n_s {
                let mut c = vec![0.0; total];
                c[slab * ny..(slab + 1) * ny].copy_from_slice(b);
                cons.push(c);
            }
        }
        cons
    }
}

/// Assemble the sector form on the tensor grid defined by the curve's
/// samples (s-cells between curve nodes) and the section mesh.
///
/// Fails when the tube map degenerates (`beta` below margin at the
/// section radius) or when `lambda_n` is flagged degenerate.
pub fn assemble_form(
    curve: &CurveSpec,
    mesh: &CrossSectionMesh,
    spectrum: &SectionSpectrum,
    eps: f64,
    n: usize,
) -> Result<TubeFormAssembly> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if spectrum.pairs.len() <= n {
        return Err(Error::InvalidInput(format!(
            "section spectrum holds {} modes, sector {n} requested",
            spectrum.pairs.len()
        )));
    }
    spectrum.require_simple(n)?;
    let val = validate_tube(curve, eps, mesh.section_radius());
    if !val.ok {
        return Err(Error::TubeDegenerate {
            min_beta: val.min_beta,
            s: val.s_at,
            y1: val.y_at[0],
            y2: val.y_at[1],
        });
    }

    let lambda_n = spectrum.lambda(n);
    let n_s = curve.len() - 1;
    let ny = mesh.node_count();
    let total = n_s * ny;
    let h_s = curve.spacing();
    let cell = mesh.cell();
    let bw = ny + 2 * mesh.bandwidth() + 2;
    let mut k = SymBanded::zeros(total, bw.min(total - 1));
    let mut mass = vec![0.0; total];
    let e2 = eps * eps;

    let g = |slab: usize, p: usize| slab * ny + p;
    let beta_at = |kappa: f64, alpha: f64, y: [f64; 2]| -> f64 {
        1.0 - eps * kappa * (y[0] * alpha.cos() + y[1] * alpha.sin())
    };

    // ---- mixed term on s-interfaces (curve nodes) -----------------------
    // stencil of the linear functional at one (interface, node)
    let mut idx = Vec::with_capacity(10);
    let mut coe = Vec::with_capacity(10);
    for k_if in 0..=n_s {
        let wall = k_if == 0 || k_if == n_s;
        let wq = if wall { 0.5 * h_s } else { h_s };
        let tk = curve.twist_at(k_if);
        let kap = curve.kappa()[k_if];
        let alp = curve.alpha()[k_if];
        for p in 0..ny {
            let y = mesh.coords()[p];
            let beta = beta_at(kap, alp, y);
            let coeff = wq * cell / beta;
            idx.clear();
            coe.clear();
            if wall {
                // ghost reflection: gradient 2 psi / h_s, no transverse part
                let slab = if k_if == 0 { 0 } else { n_s - 1 };
                idx.push(g(slab, p));
                coe.push(2.0 / h_s);
            } else {
                let (sl, sr) = (k_if - 1, k_if);
                idx.push(g(sr, p));
                coe.push(1.0 / h_s);
                idx.push(g(sl, p));
                coe.push(-1.0 / h_s);
                if tk != 0.0 {
                    let half = 0.5 * tk;
                    let cdx = half * (-y[1]) / (2.0 * mesh.hx());
                    let cdy = half * y[0] / (2.0 * mesh.hy());
                    for slab in [sl, sr] {
                        if let Some(q) = mesh.neighbor(p, 1, 0) {
                            idx.push(g(slab, q));
                            coe.push(cdx);
                        }
                        if let Some(q) = mesh.neighbor(p, -1, 0) {
                            idx.push(g(slab, q));
                            coe.push(-cdx);
                        }
                        if let Some(q) = mesh.neighbor(p, 0, 1) {
                            idx.push(g(slab, q));
                            coe.push(cdy);
                        }
                        if let Some(q) = mesh.neighbor(p, 0, -1) {
                            idx.push(g(slab, q));
                            coe.push(-cdy);
                        }
                    }
                }
            }
            // accumulate coeff * l l^T over the stencil; an off-diagonal
            // pair landing on one node would fold onto the diagonal twice
            for a in 0..idx.len() {
                for b in 0..=a {
                    let v = coeff * coe[a] * coe[b];
                    if a == b || idx[a] != idx[b] {
                        k.add(idx[a], idx[b], v);
                    } else {
                        k.add(idx[a], idx[a], 2.0 * v);
                    }
                }
            }
        }
    }

    // ---- transverse stiffness, lambda_n subtraction, mass per s-cell ----
    for slab in 0..n_s {
        let kap = 0.5 * (curve.kappa()[slab] + curve.kappa()[slab + 1]);
        let alp = 0.5 * (curve.alpha()[slab] + curve.alpha()[slab + 1]);
        for e in mesh.edges() {
            let w = beta_at(kap, alp, e.mid) * h_s * cell / e2;
            let h = if e.along_x { mesh.hx() } else { mesh.hy() };
            let c = w / (h * h);
            match (e.a, e.b) {
                (Some(p), Some(q)) => {
                    k.add(g(slab, p), g(slab, p), c);
                    k.add(g(slab, q), g(slab, q), c);
                    k.add(g(slab, p), g(slab, q), -c);
                }
                (Some(p), None) | (None, Some(p)) => {
                    k.add(g(slab, p), g(slab, p), 2.0 * c);
                }
                (None, None) => {}
            }
        }
        for p in 0..ny {
            let beta = beta_at(kap, alp, mesh.coords()[p]);
            let gg = g(slab, p);
            k.add(gg, gg, -lambda_n / e2 * beta * cell * h_s);
            mass[gg] = beta * cell * h_s;
        }
    }

    let s_centers: Vec<f64> = (0..n_s)
        .map(|i| curve.s_grid()[0] + (i as f64 + 0.5) * h_s)
        .collect();
    Ok(TubeFormAssembly {
        stiffness: k,
        mass,
        eps,
        sector: n,
        lambda_n,
        n_s,
        h_s,
        s_centers,
        section_nodes: ny,
        node_measure: cell * h_s,
        sup_kappa: curve.sup_kappa(),
    })
}

/// Lowest `j_max` eigenvalues (and vectors) of the sector pencil.
///
/// For `n = 0` these are exactly the physical tube eigenvalues shifted by
/// the divergent transverse energy, `lambda_j(tube) - lambda_0 / eps^2`:
/// the regularization is a congruence of the same discrete pencil, so the
/// identity is exact at the matrix level, not just in the limit.
///
/// Sectors `n >= 1` must pass the projector; without it the pencil is
/// unbounded below and the request is refused.
pub fn tube_eigenvalues(
    asm: &TubeFormAssembly,
    sector: Option<&SectorProjector>,
    j_max: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if asm.sector >= 1 && sector.is_none() {
        return Err(Error::MustProject(asm.sector));
    }
    if let Some(sp) = sector {
        if sp.n != asm.sector {
            return Err(Error::InvalidInput(format!(
                "projector built for sector {} used with sector {}",
                sp.n, asm.sector
            )));
        }
    }
    let constraints = match sector {
        Some(sp) if sp.n > 0 => sp.constraints(asm.section_nodes, asm.n_s),
        _ => Vec::new(),
    };
    let sigma = -1.0 - asm.sup_kappa * asm.sup_kappa;
    let opts = ShiftInvertOpts {
        tol: 1e-9,
        ..Default::default()
    };
    banded_smallest(&asm.stiffness, &asm.mass, sigma, &constraints, j_max, &opts)
}

/// `eps^2 b_n(w u_j)` for a separated state: the sector-leak functional
/// whose `eps -> 0` limit is `lambda_j - lambda_n`.
///
/// `w` lives on the s-cell centers and is normalized here in the weighted
/// inner product together with `u_j`.
pub fn leak_estimate(
    asm: &TubeFormAssembly,
    mesh: &CrossSectionMesh,
    w: &[f64],
    u_j: &EigenPair,
) -> Result<f64> {
    if w.len() != asm.n_s {
        return Err(Error::InvalidInput(format!(
            "w has {} entries, the assembly has {} s-cells",
            w.len(),
            asm.n_s
        )));
    }
    if mesh.node_count() != asm.section_nodes || u_j.u.len() != asm.section_nodes {
        return Err(Error::InvalidInput(
            "section mode does not match the assembly".into(),
        ));
    }
    let ny = asm.section_nodes;
    let mut psi = vec![0.0; asm.node_count()];
    for slab in 0..asm.n_s {
        for p in 0..ny {
            psi[slab * ny + p] = w[slab] * u_j.u[p];
        }
    }
    let nrm = asm.weighted_norm_sq(&psi).sqrt();
    psi.iter_mut().for_each(|x| *x /= nrm);
    Ok(asm.eps * asm.eps * asm.form_value(&psi))
}

/// One row of the confinement table.
#[derive(Debug, Clone)]
pub struct ConfinementRow {
    pub eps: f64,
    pub j: usize,
    pub eig_tube: f64,
    pub mu_eff: f64,
    pub diff: f64,
    pub overlap: f64,
}

/// Result of an `eps -> 0` study in one sector.
#[derive(Debug, Clone)]
pub struct ConfinementStudy {
    pub rows: Vec<ConfinementRow>,
    /// Effective 1D spectrum the tube is compared against.
    pub effective: Spectrum1D,
    /// Twist quadrature used for the effective potential.
    pub c_n: f64,
    /// Least-squares slope of `log |diff_j|` against `log eps`, per mode.
    pub fitted_order: Vec<f64>,
}

/// Squeeze the tube through `eps_list` and compare the sector spectrum
/// with the effective 1D operator on the same grids.
///
/// Both coefficients of the effective potential are taken in the mesh's
/// own conventions so the two discretizations share one squeezed limit:
/// the twist term uses the assembly-consistent quadrature of `u_n`, and
/// the curvature term uses the mesh's measured quadratic response
/// coefficient of `lambda_n(xi)` (which converges to the continuum
/// `-1/4` at second order).  With the exact constants instead, an O(h^2)
/// offset would mask the `eps`-convergence of strongly bound modes.
pub fn confinement_study(
    curve: &CurveSpec,
    mesh: &CrossSectionMesh,
    spectrum: &SectionSpectrum,
    n: usize,
    eps_list: &[f64],
    j_max: usize,
) -> Result<ConfinementStudy> {
    if eps_list.is_empty() || j_max == 0 {
        return Err(Error::InvalidInput("empty eps list or j_max = 0".into()));
    }
    spectrum.require_simple(n)?;
    let c_n = assembly_twist_quadrature(mesh, &spectrum.pairs[n].u);
    let n_s = curve.len() - 1;
    let (s0, s1) = (curve.s_grid()[0], *curve.s_grid().last().unwrap());

    // discrete renormalization coefficient of this mesh (continuum -1/4),
    // measured in the section-rotation direction at the curvature peak
    let gamma_h = if curve.sup_kappa() > 0.0 {
        let i_peak = (0..curve.len())
            .max_by(|&a, &b| curve.kappa()[a].abs().total_cmp(&curve.kappa()[b].abs()))
            .unwrap();
        let a = curve.alpha()[i_peak];
        crate::cross_section::curvature_response(mesh, [a.cos(), a.sin()], 0.1, n, spectrum)?
    } else {
        -0.25
    };

    // Effective 1D operator built as the exact separated limit of the
    // tube discretization: cell-centered kinetic part, per-cell curvature
    // wells gamma_h * kappa_mid^2, and the twist term assembled on the
    // interfaces exactly as the mixed term realizes it on w(s) u_n(y).
    let h = curve.spacing();
    let mut tri = {
        let kappa = curve.kappa();
        let v_cells: Vec<f64> = (0..n_s)
            .map(|i| {
                let kmid = 0.5 * (kappa[i] + kappa[i + 1]);
                gamma_h * kmid * kmid
            })
            .collect();
        crate::cross_section::laplacian_1d(n_s, h, &v_cells)
    };
    for k_if in 1..n_s {
        let t = curve.twist_at(k_if);
        let q = 0.25 * t * t * c_n;
        tri.diag[k_if - 1] += q;
        tri.diag[k_if] += q;
        tri.off[k_if - 1] += q;
    }
    let (mu, w_raw) = tri.smallest_eigenpairs(j_max)?;
    let scale = 1.0 / h.sqrt();
    let effective = Spectrum1D {
        mu,
        w: w_raw
            .into_iter()
            .map(|col| col.into_iter().map(|x| x * scale).collect())
            .collect(),
        grid: (0..n_s).map(|i| s0 + (i as f64 + 0.5) * h).collect(),
        interval: (s0, s1),
    };

    let projector = if n > 0 {
        Some(SectorProjector::new(spectrum, n)?)
    } else {
        None
    };
    let u_n = &spectrum.pairs[n].u;

    let mut rows = Vec::new();
    for &eps in eps_list {
        let asm = assemble_form(curve, mesh, spectrum, eps, n)?;
        let (vals, vecs) = tube_eigenvalues(&asm, projector.as_ref(), j_max)?;
        for j in 0..j_max {
            // overlap in the unweighted product, both factors unit-normalized
            let mut sep = vec![0.0; asm.node_count()];
            for slab in 0..asm.n_s {
                for p in 0..asm.section_nodes {
                    sep[slab * asm.section_nodes + p] = effective.w[j][slab] * u_n[p];
                }
            }
            let num: f64 = vecs[j].iter().zip(&sep).map(|(a, b)| a * b).sum();
            let den = (vecs[j].iter().map(|x| x * x).sum::<f64>()
                * sep.iter().map(|x| x * x).sum::<f64>())
            .sqrt();
            let overlap = (num / den).abs();
            rows.push(ConfinementRow {
                eps,
                j,
                eig_tube: vals[j],
                mu_eff: effective.mu[j],
                diff: (vals[j] - effective.mu[j]).abs(),
                overlap,
            });
        }
    }

    let fitted_order = (0..j_max)
        .map(|j| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.j == j && r.diff > 1e-300)
                .map(|r| (r.eps.ln(), r.diff.ln()))
                .collect();
            if pts.len() < 2 {
                return f64::NAN;
            }
            let nn = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            (nn * sxy - sx * sy) / (nn * sxx - sx * sx)
        })
        .collect();

    Ok(ConfinementStudy {
        rows,
        effective,
        c_n,
        fitted_order,
    })
}

/// CSV export `eps,j,eig_tube,mu_eff,diff,overlap`.
pub fn confinement_csv(study: &ConfinementStudy) -> String {
    let mut out = String::from("eps,j,eig_tube,mu_eff,diff,overlap\n");
    for r in &study.rows {
        out.push_str(&format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.eps, r.j, r.eig_tube, r.mu_eff, r.diff, r.overlap
        ));
    }
    out
}

/// JSON summary with the fitted convergence order per mode.
pub fn confinement_summary_json(study: &ConfinementStudy) -> String {
    let orders: Vec<String> = study
        .fitted_order
        .iter()
        .enumerate()
        .map(|(j, o)| format!("{{\"j\": {j}, \"order\": {o:.6}}}"))
        .collect();
    let mus: Vec<String> = study
        .effective
        .mu
        .iter()
        .map(|m| format!("{m:.16e}"))
        .collect();
    format!(
        "{{\"c_n\": {:.16e}, \"mu\": [{}], \"fitted_order\": [{}]}}\n",
        study.c_n,
        mus.join(", "),
        orders.join(", ")
    )
}

/// Direct (slow, independent) evaluation of the form integrand used by
/// the unit tests to validate the assembled matrix entry by entry.
#[doc(hidden)]
pub fn form_value_direct(
    curve: &CurveSpec,
    mesh: &CrossSectionMesh,
    lambda_n: f64,
    eps: f64,
    psi: &[f64],
) -> f64 {
    let n_s = curve.len() - 1;
    let ny = mesh.node_count();
    let h_s = curve.spacing();
    let cell = mesh.cell();
    let e2 = eps * eps;
    let g = |slab: usize, p: usize| slab * ny + p;
    let beta_at = |kappa: f64, alpha: f64, y: [f64; 2]| -> f64 {
        1.0 - eps * kappa * (y[0] * alpha.cos() + y[1] * alpha.sin())
    };
    let mut total = 0.0;

    // mixed term over interfaces
    for k_if in 0..=n_s {
        let wall = k_if == 0 || k_if == n_s;
        let wq = if wall { 0.5 * h_s } else { h_s };
        let tk = curve.twist_at(k_if);
        for p in 0..ny {
            let y = mesh.coords()[p];
            let beta = beta_at(curve.kappa()[k_if], curve.alpha()[k_if], y);
            let ell = if wall {
                let slab = if k_if == 0 { 0 } else { n_s - 1 };
                2.0 * psi[g(slab, p)] / h_s
            } else {
                let (sl, sr) = (k_if - 1, k_if);
                let ds = (psi[g(sr, p)] - psi[g(sl, p)]) / h_s;
                let ang = |slab: usize| -> f64 {
                    let up = |q: Option<usize>| q.map_or(0.0, |i| psi[g(slab, i)]);
                    let dx = (up(mesh.neighbor(p, 1, 0)) - up(mesh.neighbor(p, -1, 0)))
                        / (2.0 * mesh.hx());
                    let dy = (up(mesh.neighbor(p, 0, 1)) - up(mesh.neighbor(p, 0, -1)))
                        / (2.0 * mesh.hy());
                    -y[1] * dx + y[0] * dy
                };
                ds + tk * 0.5 * (ang(sl) + ang(sr))
            };
            total += wq * cell / beta * ell * ell;
        }
    }

    // transverse term over cells
    for slab in 0..n_s {
        let kap = 0.5 * (curve.kappa()[slab] + curve.kappa()[slab + 1]);
        let alp = 0.5 * (curve.alpha()[slab] + curve.alpha()[slab + 1]);
        for e in mesh.edges() {
            let w = beta_at(kap, alp, e.mid) * h_s * cell / e2;
            let h = if e.along_x { mesh.hx() } else { mesh.hy() };
            match (e.a, e.b) {
                (Some(p), Some(q)) => {
                    let diff = (psi[g(slab, p)] - psi[g(slab, q)]) / h;
                    total += w * diff * diff;
                }
                (Some(p), None) | (None, Some(p)) => {
                    let v = psi[g(slab, p)] / h;
                    total += 2.0 * w * v * v;
                }
                (None, None) => {}
            }
        }
        for p in 0..ny {
            let beta = beta_at(kap, alp, mesh.coords()[p]);
            let v = psi[g(slab, p)];
            total -= lambda_n / e2 * beta * cell * h_s * v * v;
        }
    }
    total
}

/// One self-contained study request for [`confinement_studies_par`].
#[derive(Debug, Clone)]
pub struct ConfinementJob {
    pub curve: CurveSpec,
    pub mesh: CrossSectionMesh,
    pub spectrum: SectionSpectrum,
    pub sector: usize,
    pub eps_list: Vec<f64>,
    pub j_max: usize,
}

/// Run several sector studies concurrently, preserving input order.
pub fn confinement_studies_par(jobs: &[ConfinementJob]) -> Vec<Result<ConfinementStudy>> {
    jobs.par_iter()
        .map(|j| {
            confinement_study(
                &j.curve,
                &j.mesh,
                &j.spectrum,
                j.sector,
                &j.eps_list,
                j.j_max,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::{build_mesh, dirichlet_eigenpairs, laplacian_1d, SectionShape};
    use crate::geometry::presets;
    use crate::linalg::dense;
    use crate::rng::SplitMix64;
    use std::f64::consts::PI;

    fn small_mesh() -> CrossSectionMesh {
        build_mesh(
            &SectionShape::Rectangle {
                a: PI,
                b: PI / 2f64.sqrt(),
            },
            PI / 8.0,
        )
        .unwrap()
    }

    #[test]
    fn straight_tube_separates_exactly() {
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 4).unwrap();
        let curve = presets::straight(3.0, 25);
        let eps = 0.3;
        let asm = assemble_form(&curve, &mesh, &spec, eps, 0).unwrap();
        let (vals, _) = tube_eigenvalues(&asm, None, 4).unwrap();

        // oracle: 1D cell Laplacian eigenvalues + transverse branch offsets
        let n_s = curve.len() - 1;
        let h = curve.spacing();
        let t = laplacian_1d(n_s, h, &vec![0.0; n_s]);
        let box_modes = t.smallest_eigenvalues(6);
        let mut expected: Vec<f64> = Vec::new();
        for m in 0..3 {
            let off = (spec.lambda(m) - spec.lambda(0)) / (eps * eps);
            for bm in &box_modes {
                expected.push(bm + off);
            }
        }
        expected.sort_by(f64::total_cmp);
        for j in 0..4 {
            assert!(
                (vals[j] - expected[j]).abs() < 1e-7 * expected[j].abs().max(1.0),
                "mode {j}: {} vs {}",
                vals[j],
                expected[j]
            );
        }
    }

    #[test]
    fn assembled_form_matches_direct_quadrature() {
        // generic bent twisted tube, random vectors: the banded matrix is
        // the quadrature of the integrand, entry for entry
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 2).unwrap();
        let n = 13;
        let s: Vec<f64> = (0..n).map(|i| i as f64 * 0.25).collect();
        let kappa: Vec<f64> = s.iter().map(|x| 0.3 * (x * 1.3).sin()).collect();
        let tau: Vec<f64> = s.iter().map(|x| 0.2 * (x * 0.7).cos()).collect();
        let alpha: Vec<f64> = s.iter().map(|x| 0.15 * x).collect();
        let curve = CurveSpec::new(s, kappa, tau, alpha, None).unwrap();
        let eps = 0.2;
        let asm = assemble_form(&curve, &mesh, &spec, eps, 0).unwrap();
        let mut rng = SplitMix64::new(31);
        for _ in 0..3 {
            let psi: Vec<f64> = (0..asm.node_count()).map(|_| rng.next_sym()).collect();
            let via_matrix = asm.form_value(&psi);
            let direct = form_value_direct(&curve, &mesh, asm.lambda_n, eps, &psi);
            assert!(
                (via_matrix - direct).abs() < 1e-10 * direct.abs().max(1.0),
                "{via_matrix} vs {direct}"
            );
        }
        // mass is the weighted norm
        let psi: Vec<f64> = (0..asm.node_count()).map(|_| rng.next_sym()).collect();
        let m = asm.weighted_norm_sq(&psi);
        assert!(m > 0.0);
        assert!(asm.mass.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn assembled_form_is_symmetric_as_an_operator() {
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 2).unwrap();
        let curve = presets::bump_curve(3.0, 1.5, 1.0, 0.8, 17);
        let asm = assemble_form(&curve, &mesh, &spec, 0.2, 0).unwrap();
        let n = asm.node_count();
        let mut rng = SplitMix64::new(77);
        for _ in 0..5 {
            let psi: Vec<f64> = (0..n).map(|_| rng.next_sym()).collect();
            let phi: Vec<f64> = (0..n).map(|_| rng.next_sym()).collect();
            let a_psi_phi = asm.stiffness.bilinear(&psi, &phi);
            let a_phi_psi = asm.stiffness.bilinear(&phi, &psi);
            let scale = a_psi_phi.abs().max(1.0);
            assert!(
                (a_psi_phi - a_phi_psi).abs() <= 1e-12 * scale,
                "asymmetry {:.3e}",
                (a_psi_phi - a_phi_psi).abs()
            );
        }
    }

    #[test]
    fn mask_section_tube_runs_end_to_end() {
        // an asymmetric bitmap section through the full pipeline: the
        // bandwidth bookkeeping and the study must hold up unchanged
        let mut rows = String::new();
        for r in 0..10 {
            for c in 0..14 {
                rows.push(if r < 4 && c >= 9 { '0' } else { '1' });
            }
            rows.push('\n');
        }
        let shape = crate::cross_section::SectionShape::mask_from_text(&rows).unwrap();
        let mesh = build_mesh(&shape, 0.22).unwrap();
        let spec = dirichlet_eigenpairs(&mesh, 1).unwrap();
        let curve = presets::bump_curve(6.0, 3.0, 1.2, 1.0, 31);
        let study = confinement_study(&curve, &mesh, &spec, 0, &[0.2, 0.1], 2).unwrap();
        for j in 0..2 {
            let d: Vec<f64> = study
                .rows
                .iter()
                .filter(|r| r.j == j)
                .map(|r| r.diff)
                .collect();
            assert!(d[1] < d[0], "mask tube mode {j} not improving: {d:?}");
        }
    }

    #[test]
    fn gauge_invariance_is_bit_exact() {
        // (tau, alpha') -> (tau + g, alpha' + g) with dyadic samples leaves
        // the assembly bit-identical: only tau - alpha' enters
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 2).unwrap();
        let n = 9;
        let s: Vec<f64> = (0..n).map(|i| i as f64 * 0.25).collect();
        let kappa = vec![0.25; n];
        let tau: Vec<f64> = (0..n).map(|i| 0.5 + 0.125 * (i % 3) as f64).collect();
        let ad: Vec<f64> = (0..n).map(|i| 0.25 - 0.0625 * (i % 2) as f64).collect();
        let alpha = vec![0.0; n];
        let gshift = 2.0;
        let curve1 = CurveSpec::new(
            s.clone(),
            kappa.clone(),
            tau.clone(),
            alpha.clone(),
            Some(ad.clone()),
        )
        .unwrap();
        let tau2: Vec<f64> = tau.iter().map(|t| t + gshift).collect();
        let ad2: Vec<f64> = ad.iter().map(|a| a + gshift).collect();
        let curve2 = CurveSpec::new(s, kappa, tau2, alpha, Some(ad2)).unwrap();
        let a1 = assemble_form(&curve1, &mesh, &spec, 0.25, 0).unwrap();
        let a2 = assemble_form(&curve2, &mesh, &spec, 0.25, 0).unwrap();
        assert!(
            a1.stiffness == a2.stiffness,
            "stiffness differs under gauge shift"
        );
        assert_eq!(a1.mass, a2.mass);
    }

    #[test]
    fn leak_estimate_identities_for_straight_tube() {
        // kappa = 0: eps^2 b_n(w u_j) = (lambda_j - lambda_n)
        //            + eps^2 (sum |Dw|^2 + twist * C_j(w-avg))  exactly
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 3).unwrap();
        let curve = presets::twisted_straight(3.0, 1.5, 1.0, 0.8, 25);
        let eps = 0.2;
        let n_s = curve.len() - 1;
        let h = curve.spacing();
        // smooth unit test profile on the cell centers
        let mut w: Vec<f64> = (0..n_s)
            .map(|i| {
                let sc = (i as f64 + 0.5) * h;
                (PI * sc / 3.0).sin()
            })
            .collect();
        let nrm = (w.iter().map(|x| x * x).sum::<f64>() * h * 1.0).sqrt();
        w.iter_mut().for_each(|x| *x /= nrm);

        for nsec in [0usize, 1] {
            let asm = assemble_form(&curve, &mesh, &spec, eps, nsec).unwrap();
            for j in 0..3usize {
                let got = leak_estimate(&asm, &mesh, &w, &spec.pairs[j]).unwrap();
                // independent evaluation with the same staggered rule
                let cj = assembly_twist_quadrature(&mesh, &spec.pairs[j].u);
                let mut dsum = 0.0; // interfaces, incl. ghost walls
                let mut tsum = 0.0;
                for k_if in 0..=n_s {
                    if k_if == 0 {
                        dsum += 0.5 * h * (2.0 * w[0] / h).powi(2);
                        continue;
                    }
                    if k_if == n_s {
                        dsum += 0.5 * h * (2.0 * w[n_s - 1] / h).powi(2);
                        continue;
                    }
                    let dw = (w[k_if] - w[k_if - 1]) / h;
                    let wbar = 0.5 * (w[k_if] + w[k_if - 1]);
                    let tk = curve.twist_at(k_if);
                    dsum += h * dw * dw;
                    tsum += h * tk * tk * wbar * wbar * cj;
                }
                let expect = (spec.lambda(j) - spec.lambda(nsec)) + eps * eps * (dsum + tsum);
                assert!(
                    (got - expect).abs() < 1e-10 * expect.abs().max(1.0),
                    "sector {nsec}, j = {j}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn leak_toward_lower_sector_is_negative_and_upper_positive() {
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 3).unwrap();
        let curve = presets::bump_curve(3.0, 1.5, 1.0, 0.6, 25);
        let n_s = curve.len() - 1;
        let h = curve.spacing();
        let mut w: Vec<f64> = (0..n_s)
            .map(|i| (PI * (i as f64 + 0.5) * h / 3.0).sin())
            .collect();
        let nrm = (w.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
        w.iter_mut().for_each(|x| *x /= nrm);
        let asm1 = assemble_form(&curve, &mesh, &spec, 0.1, 1).unwrap();
        let down = leak_estimate(&asm1, &mesh, &w, &spec.pairs[0]).unwrap();
        assert!(
            down < 0.0,
            "leak toward the lower sector must be negative: {down}"
        );
        let asm0 = assemble_form(&curve, &mesh, &spec, 0.1, 0).unwrap();
        let up = leak_estimate(&asm0, &mesh, &w, &spec.pairs[1]).unwrap();
        assert!(up > 0.0);
        // and the eps -> 0 limit approaches lambda_0 - lambda_1
        let target = spec.lambda(0) - spec.lambda(1);
        let mut prev_err = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let asm = assemble_form(&curve, &mesh, &spec, eps, 1).unwrap();
            let le = leak_estimate(&asm, &mesh, &w, &spec.pairs[0]).unwrap();
            let err = (le - target).abs();
            assert!(err < prev_err, "leak error not shrinking at eps = {eps}");
            prev_err = err;
        }
    }

    #[test]
    fn lower_bound_inequality_holds_on_random_vectors() {
        // b_n(psi) + c |psi|_eps^2 >= (1/2) sup k^2 |psi|^2 for c = sup k^2,
        // on both study geometries (bent sector 0, twisted sector 1)
        let mesh = small_mesh();
        let bent = presets::bump_curve(3.0, 1.5, 1.0, 0.8, 25);
        let twisted = presets::twisted_straight(3.0, 1.5, 1.0, 0.9, 25);
        let mut rng = SplitMix64::new(7);
        for (curve, n_modes, sector) in [(&bent, 1usize, 0usize), (&twisted, 2, 1)] {
            let spec = dirichlet_eigenpairs(&mesh, n_modes.max(sector + 1)).unwrap();
            // the twisted tube has sup kappa = 0; use the bent tube's bound
            // there so the tested constant is positive in both cases
            let c = bent.sup_kappa().powi(2);
            let asm = assemble_form(curve, &mesh, &spec, 0.05, sector).unwrap();
            // for sector 1 the bound holds on the deflated subspace only
            let proj = SectorProjector::new(&spec, sector).unwrap();
            for _ in 0..20 {
                let mut psi: Vec<f64> =
                    (0..asm.node_count()).map(|_| rng.next_sym()).collect();
                proj.project(asm.section_nodes, asm.n_s, &mut psi);
                let lhs = asm.form_value(&psi) + c * asm.weighted_norm_sq(&psi);
                let rhs = 0.5 * c * asm.plain_norm_sq(&psi);
                assert!(lhs >= rhs - 1e-10 * rhs.abs(), "sector {sector}: {lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn mass_approaches_unweighted_norm() {
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 1).unwrap();
        let curve = presets::bump_curve(3.0, 1.5, 1.0, 1.0, 25);
        let r = mesh.section_radius();
        let mut rng = SplitMix64::new(12);
        let psi: Vec<f64> = (0..(curve.len() - 1) * mesh.node_count())
            .map(|_| rng.next_sym())
            .collect();
        for eps in [0.2, 0.1, 0.05] {
            let asm = assemble_form(&curve, &mesh, &spec, eps, 0).unwrap();
            let weighted = asm.weighted_norm_sq(&psi).sqrt();
            let plain = asm.plain_norm_sq(&psi).sqrt();
            let bound = eps * curve.sup_kappa() * r;
            assert!(
                (weighted - plain).abs() <= bound * plain + 1e-12,
                "eps = {eps}: |{weighted} - {plain}| > {bound} * plain"
            );
        }
    }

    #[test]
    fn sector_projector_is_idempotent_and_required() {
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 3).unwrap();
        let curve = presets::straight(3.0, 17);
        let asm = assemble_form(&curve, &mesh, &spec, 0.2, 1).unwrap();
        assert!(matches!(
            tube_eigenvalues(&asm, None, 2),
            Err(Error::MustProject(1))
        ));

        let proj = SectorProjector::new(&spec, 2).unwrap();
        let mut rng = SplitMix64::new(3);
        let mut psi: Vec<f64> = (0..asm.node_count()).map(|_| rng.next_sym()).collect();
        proj.project(asm.section_nodes, asm.n_s, &mut psi);
        let once = psi.clone();
        proj.project(asm.section_nodes, asm.n_s, &mut psi);
        let drift: f64 = once
            .iter()
            .zip(&psi)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(
            drift < 1e-12 * dense::norm(&once),
            "projector not idempotent: {drift}"
        );
    }

    #[test]
    fn deflated_straight_tube_reproduces_second_sector() {
        // straight untwisted tube, sector 1 with deflation: lowest
        // eigenvalue is the 1D box mode (the lower branch is removed)
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 3).unwrap();
        let curve = presets::straight(3.0, 25);
        let asm = assemble_form(&curve, &mesh, &spec, 0.25, 1).unwrap();
        let proj = SectorProjector::new(&spec, 1).unwrap();
        let (vals, vecs) = tube_eigenvalues(&asm, Some(&proj), 2).unwrap();
        let n_s = curve.len() - 1;
        let t = laplacian_1d(n_s, curve.spacing(), &vec![0.0; n_s]);
        let box_modes = t.smallest_eigenvalues(2);
        for j in 0..2 {
            assert!(
                (vals[j] - box_modes[j]).abs() < 1e-7 * box_modes[j].max(1.0),
                "mode {j}: {} vs {}",
                vals[j],
                box_modes[j]
            );
        }
        // solutions satisfy the slab constraints
        for v in &vecs {
            for slab in 0..asm.n_s {
                let seg = &v[slab * asm.section_nodes..(slab + 1) * asm.section_nodes];
                let ip: f64 = seg.iter().zip(&spec.pairs[0].u).map(|(a, b)| a * b).sum();
                assert!(ip.abs() < 1e-7, "constraint violated: {ip}");
            }
        }
    }

    #[test]
    fn degenerate_section_mode_is_refused() {
        let mesh = build_mesh(&SectionShape::Rectangle { a: PI, b: PI }, PI / 10.0).unwrap();
        let spec = dirichlet_eigenpairs(&mesh, 3).unwrap();
        let curve = presets::straight(2.0, 9);
        assert!(matches!(
            assemble_form(&curve, &mesh, &spec, 0.2, 1),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn degenerate_tube_is_refused() {
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 1).unwrap();
        let curve = presets::circular_arc(1.0, 2.0, 9);
        // eps large enough that beta hits zero at the section radius
        let eps = 1.0 / mesh.section_radius() * 1.05;
        assert!(matches!(
            assemble_form(&curve, &mesh, &spec, eps, 0),
            Err(Error::TubeDegenerate { .. })
        ));
    }

    #[test]
    fn confinement_study_straight_tube_is_exact() {
        let mesh = small_mesh();
        let spec = dirichlet_eigenpairs(&mesh, 1).unwrap();
        let curve = presets::straight(3.0, 25);
        let study = confinement_study(&curve, &mesh, &spec, 0, &[0.3, 0.15], 3).unwrap();
        for r in &study.rows {
            assert!(
                r.diff < 1e-7 * r.mu_eff.abs().max(1.0),
                "diff {} at eps {}",
                r.diff,
                r.eps
            );
            assert!(r.overlap > 1.0 - 1e-9, "overlap {}", r.overlap);
        }
    }

    #[test]
    fn confinement_study_bent_tube_converges() {
        // coarse smoke test of the acceptance geometry; the comparison
        // operator is the exact separated limit of the tube scheme, so the
        // differences read off the genuine eps-effects even at h = pi/10
        let mesh = build_mesh(
            &SectionShape::Rectangle {
                a: PI,
                b: PI / 2f64.sqrt(),
            },
            PI / 10.0,
        )
        .unwrap();
        let spec = dirichlet_eigenpairs(&mesh, 1).unwrap();
        let curve = presets::bump_curve(10.0, 5.0, 1.5, 1.5, 77);
        let study = confinement_study(&curve, &mesh, &spec, 0, &[0.2, 0.1], 2).unwrap();
        for j in 0..2 {
            let d: Vec<f64> = study
                .rows
                .iter()
                .filter(|r| r.j == j)
                .map(|r| r.diff)
                .collect();
            assert!(d[1] < d[0], "mode {j} not improving: {d:?}");
            let o: Vec<f64> = study
                .rows
                .iter()
                .filter(|r| r.j == j)
                .map(|r| r.overlap)
                .collect();
            assert!(o[1] > 0.95, "overlap {} too small", o[1]);
        }
    }
}
