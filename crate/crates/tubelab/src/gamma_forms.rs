//! Finite-dimensional laboratory for variational form convergence.
//!
//! For lower-bounded closed quadratic forms, variational (Gamma)
//! convergence together with its weak counterpart is equivalent to strong
//! resolvent convergence of the associated operators; on R^N both notions
//! collapse to checkable matrix statements.  This module generates
//! families `T_eps -> T` (with the limit living on a subspace, projector
//! `P0`) and verifies, sample by sample:
//!
//! * the perturbed minimum `min b_eps + lambda|.|^2 + Re<eta, .>` has the
//!   closed form `-1/4 <eta, (T_eps + lambda)^{-1} eta>` and converges to
//!   the projected limit value;
//! * the resolvents converge pointwise: `(T_eps+lambda)^{-1} z ->
//!   (T+lambda)^{-1} P0 z`;
//! * the two criteria agree (they are equivalent);
//! * minimizers converge, `T zeta = P0 eta` characterizes them, and the
//!   form has the `sup`-representation
//!   `b(z) = sup_eta [2<T eta, z> - <T eta, eta>]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::dense::sym_eigh_ascending;
use crate::rng::SplitMix64;

/// A family of forms `T_eps` with its declared limit on `range P0`.
#[derive(Debug, Clone)]
pub struct FormSequence {
    pub dimension: usize,
    /// `(eps, T_eps)` pairs, eps strictly decreasing.
    pub forms: Vec<(f64, DMatrix<f64>)>,
    /// Limit operator, supported on `range p0` (stored full-size).
    pub limit: DMatrix<f64>,
    /// Orthogonal projector onto the limit's subspace.
    pub p0: DMatrix<f64>,
    /// Declared uniform lower bound of all forms.
    pub beta: f64,
    /// Whether the family is meant to converge at all (the oscillating
    /// family is built not to).
    pub convergent: bool,
}

/// Built-in family kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// `T + eps Delta`, full-space limit `T`.
    Perturbation,
    /// `T (+) eps^{-1} I` on a complement block: the penalized directions
    /// stiffen away and the limit lives on the kept subspace.
    Penalization,
    /// Alternates between two distinct operators along the eps list; has
    /// no limit.
    Oscillation,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "perturbation" => Ok(FamilyKind::Perturbation),
            "penalization" => Ok(FamilyKind::Penalization),
            "oscillation" => Ok(FamilyKind::Oscillation),
            other => Err(Error::Config(format!(
                "unknown family {other:?}: expected perturbation | penalization | oscillation"
            ))),
        }
    }
}

fn random_spd(n: usize, rng: &mut SplitMix64, shift: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.next_sym());
    let sym = &a * a.transpose();
    sym + DMatrix::identity(n, n) * shift
}

fn random_sym(n: usize, rng: &mut SplitMix64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.next_sym());
    0.5 * (&a + a.transpose())
}

/// Generate one seeded family of the given kind.
pub fn generate_family(
    kind: FamilyKind,
    dimension: usize,
    eps_list: &[f64],
    seed: u64,
) -> FormSequence {
    let mut rng = SplitMix64::new(seed);
    let n = dimension;
    match kind {
        FamilyKind::Perturbation => {
            let t = random_spd(n, &mut rng, 0.3);
            let delta = random_sym(n, &mut rng);
            let forms = eps_list
                .iter()
                .map(|&e| (e, &t + e * &delta))
                .collect::<Vec<_>>();
            let beta = forms
                .iter()
                .map(|(_, m)| sym_eigh_ascending(m).0[0])
                .fold(f64::INFINITY, f64::min)
                .min(sym_eigh_ascending(&t).0[0]);
            FormSequence {
                dimension: n,
                forms,
                limit: t,
                p0: DMatrix::identity(n, n),
                beta,
                convergent: true,
            }
        }
        FamilyKind::Penalization => {
            // the finite-dimensional shadow of the tube's lambda_n/eps^2
            // mechanism: a block of directions is pushed to infinite energy
            let keep = (n / 2).max(1);
            let t_small = random_spd(keep, &mut rng, 0.2);
            let mut p0 = DMatrix::zeros(n, n);
            let mut limit = DMatrix::zeros(n, n);
            for i in 0..keep {
                p0[(i, i)] = 1.0;
                for j in 0..keep {
                    limit[(i, j)] = t_small[(i, j)];
                }
            }
            let forms = eps_list
                .iter()
                .map(|&e| {
                    let mut m = limit.clone();
                    for i in keep..n {
                        m[(i, i)] = 1.0 / e;
                    }
                    (e, m)
                })
                .collect();
            FormSequence {
                dimension: n,
                forms,
                limit,
                p0,
                beta: 0.0,
                convergent: true,
            }
        }
        FamilyKind::Oscillation => {
            let t1 = random_spd(n, &mut rng, 0.3);
            let t2 = &t1 + random_spd(n, &mut rng, 1.0);
            let forms = eps_list
                .iter()
                .enumerate()
                .map(|(i, &e)| (e, if i % 2 == 0 { t1.clone() } else { t2.clone() }))
                .collect();
            FormSequence {
                dimension: n,
                forms,
                limit: t1.clone(),
                p0: DMatrix::identity(n, n),
                beta: 0.0,
                convergent: false,
            }
        }
    }
}

/// Closed-form minimum of `b(z) + lambda |z|^2 + Re <eta, z>`:
/// value `-1/4 <eta, (T+lambda)^{-1} eta>` at `z = -1/2 (T+lambda)^{-1} eta`.
pub fn min_perturbed(
    t: &DMatrix<f64>,
    lambda: f64,
    eta: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    let n = t.nrows();
    let shifted = t + DMatrix::identity(n, n) * lambda;
    let chol = shifted
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("T + lambda I is not positive definite".into()))?;
    let sol = chol.solve(eta);
    let value = -0.25 * eta.dot(&sol);
    let minimizer = -0.5 * sol;
    // stationarity cross-check: gradient 2(T+lambda) z + eta = 0
    let grad = 2.0 * &shifted * &minimizer + eta;
    if grad.norm() > 1e-8 * eta.norm().max(1.0) {
        return Err(Error::NonConvergent(format!(
            "minimizer stationarity violated: |grad| = {:.3e}",
            grad.norm()
        )));
    }
    Ok((value, minimizer))
}

/// Minimum of the limit functional: the source only acts through `P0`.
fn min_perturbed_limit(
    limit: &DMatrix<f64>,
    p0: &DMatrix<f64>,
    lambda: f64,
    eta: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    let n = limit.nrows();
    // solve on range P0 by regularizing the complement
    let eta0 = p0 * eta;
    let sys = limit + lambda * p0 + (DMatrix::identity(n, n) - p0);
    let sol = sys
        .clone()
        .lu()
        .solve(&eta0)
        .ok_or_else(|| Error::InvalidInput("limit system is singular".into()))?;
    let value = -0.25 * eta0.dot(&sol);
    Ok((value, -0.5 * sol))
}

/// Resolvent `(T + lambda)^{-1}` acting on a vector.
pub fn resolvent_apply(t: &DMatrix<f64>, lambda: f64, z: &DVector<f64>) -> Result<DVector<f64>> {
    let n = t.nrows();
    let shifted = t + DMatrix::identity(n, n) * lambda;
    shifted
        .lu()
        .solve(z)
        .ok_or_else(|| Error::InvalidInput("resolvent system is singular".into()))
}

/// Resolvent of the limit in its subspace: `(T + lambda)^{-1} P0 z`.
pub fn limit_resolvent_apply(
    limit: &DMatrix<f64>,
    p0: &DMatrix<f64>,
    lambda: f64,
    z: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = limit.nrows();
    let sys = limit + lambda * p0 + (DMatrix::identity(n, n) - p0);
    sys.lu()
        .solve(&(p0 * z))
        .ok_or_else(|| Error::InvalidInput("limit resolvent singular".into()))
}

/// Verdict of one convergence criterion over the sampled family.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub holds: bool,
    /// Deviation from the limit at each eps, worst over the samples.
    pub deviations: Vec<(f64, f64)>,
}

/// Joint report of the minimum-convergence criterion and the
/// strong-resolvent criterion.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub minima: CriterionReport,
    pub resolvents: CriterionReport,
    /// The two criteria agree on this family.
    pub agree: bool,
}

/// Check the equivalence "perturbed minima converge for every source"
/// <=> "resolvents converge pointwise" on sampled sources.
///
/// A criterion holds when its worst deviation at the smallest eps is
/// below `tol` and no larger than its value at the largest eps.
pub fn check_equivalence_iv_v(
    seq: &FormSequence,
    lambda: f64,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivalenceReport> {
    if lambda <= (-seq.beta).max(0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda = {lambda} must exceed max(0, -beta) = {}",
            (-seq.beta).max(0.0)
        )));
    }
    let n = seq.dimension;
    let mut rng = SplitMix64::new(seed);
    let mut samples: Vec<DVector<f64>> = Vec::new();
    for i in 0..n.min(4) {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        samples.push(e);
    }
    for _ in 0..n_samples {
        samples.push(DVector::from_vec(rng.unit_vector(n)));
    }

    let mut dev_min = Vec::new();
    let mut dev_res = Vec::new();
    for (eps, t_eps) in &seq.forms {
        let mut worst_min = 0.0f64;
        let mut worst_res = 0.0f64;
        for eta in &samples {
            let (val, _) = min_perturbed(t_eps, lambda, eta)?;
            let (val_lim, _) = min_perturbed_limit(&seq.limit, &seq.p0, lambda, eta)?;
            worst_min = worst_min.max((val - val_lim).abs());
            let r = resolvent_apply(t_eps, lambda, eta)?;
            let rl = limit_resolvent_apply(&seq.limit, &seq.p0, lambda, eta)?;
            worst_res = worst_res.max((r - rl).norm());
        }
        dev_min.push((*eps, worst_min));
        dev_res.push((*eps, worst_res));
    }
    let verdict = |devs: &[(f64, f64)]| -> bool {
        let last = devs.last().unwrap().1;
        let first = devs.first().unwrap().1;
        last <= tol && last <= first + tol
    };
    let minima = CriterionReport {
        holds: verdict(&dev_min),
        deviations: dev_min,
    };
    let resolvents = CriterionReport {
        holds: verdict(&dev_res),
        deviations: dev_res,
    };
    let agree = minima.holds == resolvents.holds;
    Ok(EquivalenceReport {
        minima,
        resolvents,
        agree,
    })
}

/// Residual of the minimizer characterization: the minimizer of
/// `b(z) - 2<eta, z>` over `range P0` satisfies `T z = P0 eta`.
///
/// Flags the functional as unbounded below when the projected source has
/// a component in the kernel of `T` restricted to `range P0`.
pub fn minimizer_identity(t: &DMatrix<f64>, p0: &DMatrix<f64>, eta: &DVector<f64>) -> Result<f64> {
    let n = t.nrows();
    let eta0 = p0 * eta;
    // spectral solve on range P0; kernel components flagged
    let tp = p0 * t * p0;
    let (vals, vecs) = sym_eigh_ascending(&tp);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut z = DVector::zeros(n);
    for j in 0..n {
        let v = vecs.column(j);
        let on_range = (p0 * v.clone_owned()).norm() > 0.5;
        if !on_range {
            continue;
        }
        let coef = v.dot(&eta0);
        if vals[j].abs() <= 1e-12 * scale {
            if coef.abs() > 1e-10 * eta0.norm().max(1.0) {
                return Err(Error::UnboundedBelow);
            }
            continue;
        }
        if vals[j] < 0.0 {
            return Err(Error::InvalidInput(
                "T must be positive semidefinite on range P0".into(),
            ));
        }
        z += v.clone_owned() * (coef / vals[j]);
    }
    let residual = (t * &z - &eta0).norm();
    Ok(residual)
}

/// One-sided sup-representation of the form: over the sample set,
/// `sup_eta [2 <T eta, z> - <T eta, eta>] <= b(z)`, with equality when
/// `z` itself is sampled.  Returns `(sup, gap)`; `gap = b(z) - sup`.
/// For `z` outside `range P0` the form takes the value infinity.
pub fn sup_representation(
    t: &DMatrix<f64>,
    p0: &DMatrix<f64>,
    z: &DVector<f64>,
    samples: &[DVector<f64>],
) -> (f64, f64) {
    let off = (z - p0 * z).norm();
    if off > 1e-10 * z.norm().max(1.0) {
        return (f64::INFINITY, f64::INFINITY);
    }
    let bz = z.dot(&(t * z));
    let mut sup = f64::NEG_INFINITY;
    for eta in samples {
        let teta = t * eta;
        let cand = 2.0 * teta.dot(z) - teta.dot(eta);
        sup = sup.max(cand);
    }
    (sup, bz - sup)
}

/// Track minimizers of the shifted functionals across the family.
#[derive(Debug, Clone)]
pub struct MinimizerReport {
    /// `(eps, |zeta_eps - zeta_limit|)` rows.
    pub distances: Vec<(f64, f64)>,
    pub limit_minimizer: DVector<f64>,
}

/// Minimizers `zeta_eps = (T_eps + lambda)^{-1} eta` converge to the
/// projected limit minimizer when the family converges.
pub fn minimizer_convergence(
    seq: &FormSequence,
    lambda: f64,
    eta: &DVector<f64>,
) -> Result<MinimizerReport> {
    let zl = limit_resolvent_apply(&seq.limit, &seq.p0, lambda, eta)?;
    let mut distances = Vec::new();
    for (eps, t_eps) in &seq.forms {
        let z = resolvent_apply(t_eps, lambda, eta)?;
        distances.push((*eps, (z - &zl).norm()));
    }
    Ok(MinimizerReport {
        distances,
        limit_minimizer: zl,
    })
}

/// Matrix order comparison `A <= B` via the smallest eigenvalue of `B - A`.
pub fn matrix_leq(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    sym_eigh_ascending(&(b - a)).0[0] >= -tol
}
