//! Study orchestration: one runner per subcommand.
//!
//! Runners compute everything in memory first and only then write the
//! output files, so a failing run leaves no partial artifacts.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::broken_line::{
    self, construct_zero_mean_resonant, delta_convergence_study, delta_study_csv, detect_resonance,
    scale_potential, scattering_1d, square_well, MeanBranch, VertexCondition,
};
use crate::cli::config::RawConfig;
use crate::cross_section::{
    build_mesh, curvature_response, dirichlet_eigenpairs, spectrum_csv, twist_coefficient,
    SectionShape, TwistCoefficient,
};
use crate::effective_operator::{bound_state_exists, effective_potential, schrodinger_eigen};
use crate::error::{Error, Result};
use crate::gamma_forms::{
    check_equivalence_iv_v, generate_family, minimizer_identity, sup_representation, FamilyKind,
};
use crate::geometry::{build_frame, jacobian_at, metric_at, CurveSpec};
use crate::rng::SplitMix64;
use crate::tube3d::{
    assemble_form, confinement_csv, confinement_study, confinement_summary_json, leak_estimate,
    SectorProjector,
};

/// A file scheduled for writing once the study succeeded.
pub struct Artifact {
    pub name: String,
    pub content: String,
}

pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// One-line summary printed to stdout.
    pub lines: Vec<String>,
}

fn artifact(name: &str, content: String) -> Artifact {
    Artifact {
        name: name.to_string(),
        content,
    }
}

/// Render a gnuplot-friendly `.dat` block: `#`-prefixed header, space
/// separated columns.
fn dat_table(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = format!("# {header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

// ---------------------------------------------------------------- section

pub fn run_cross_section(cfg: &RawConfig, seed: u64) -> Result<RunOutput> {
    let _ = seed;
    let task = cfg.get("cross-section", "task").unwrap_or("modes");
    let shape = cfg.section_shape()?;
    let h = cfg.section_h()?;
    let mesh = build_mesh(&shape, h)?;
    let modes: Vec<usize> = match cfg.get("cross-section", "modes") {
        Some(raw) => raw
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad mode index {t:?}")))
            })
            .collect::<Result<_>>()?,
        None => vec![0, 1, 2],
    };
    let n_max = modes.iter().copied().max().unwrap_or(0);
    let spectrum = dirichlet_eigenpairs(&mesh, n_max + 1)?;

    let mut out = RunOutput {
        artifacts: vec![],
        lines: vec![],
    };
    match task {
        "modes" | "oracle" => {
            let csv = spectrum_csv(&mesh, &spectrum);
            let rows: Vec<Vec<f64>> = spectrum
                .pairs
                .iter()
                .enumerate()
                .map(|(i, p)| vec![i as f64, p.lambda, twist_coefficient(&mesh, p, i).value])
                .collect();
            out.artifacts.push(artifact("spectrum.csv", csv));
            out.artifacts.push(artifact(
                "spectrum.dat",
                dat_table("index lambda C_n", &rows),
            ));
            for (i, p) in spectrum.pairs.iter().enumerate() {
                out.lines.push(format!("lambda_{i} = {:.10}", p.lambda));
            }

            #[derive(Serialize)]
            struct Summary {
                node_count: usize,
                lambda: Vec<f64>,
                twist: Vec<f64>,
                degenerate_pairs: Vec<usize>,
                disc_twist: Option<f64>,
                square_degenerate: Option<bool>,
            }
            let mut summary = Summary {
                node_count: mesh.node_count(),
                lambda: spectrum.pairs.iter().map(|p| p.lambda).collect(),
                twist: spectrum
                    .pairs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| twist_coefficient(&mesh, p, i).value)
                    .collect(),
                degenerate_pairs: spectrum.degenerate.iter().map(|d| d.0).collect(),
                disc_twist: None,
                square_degenerate: None,
            };
            if task == "oracle" {
                if let Some(dh) = cfg.f64_opt("cross-section", "disc_h")? {
                    let disc = build_mesh(&SectionShape::Disc { r: 1.0 }, dh)?;
                    let dspec = dirichlet_eigenpairs(&disc, 1)?;
                    let c0 = twist_coefficient(&disc, &dspec.pairs[0], 0);
                    summary.disc_twist = Some(c0.value);
                    out.lines.push(format!("disc C_0 = {:.6e}", c0.value));
                }
                if let Some(sh) = cfg.f64_opt("cross-section", "square_h")? {
                    let pi = std::f64::consts::PI;
                    let sq = build_mesh(&SectionShape::Rectangle { a: pi, b: pi }, sh)?;
                    let sspec = dirichlet_eigenpairs(&sq, 3)?;
                    let flagged = sspec.degenerate.iter().any(|&(k, _)| k == 1);
                    summary.square_degenerate = Some(flagged);
                    out.lines
                        .push(format!("square degeneracy flagged = {flagged}"));
                }
            }
            out.artifacts.push(artifact(
                "summary.json",
                serde_json::to_string_pretty(&summary).expect("serialize") + "\n",
            ));
        }
        "response" => {
            let xi0 = cfg.f64_opt("cross-section", "xi0")?.unwrap_or(0.1);
            let mut rows = Vec::new();
            let mut coeffs = Vec::new();
            for &n in &modes {
                let g = curvature_response(&mesh, [1.0, 0.0], xi0, n, &spectrum)?;
                out.lines
                    .push(format!("mode {n}: response coefficient {g:.6}"));
                rows.push(vec![n as f64, g]);
                coeffs.push(g);
            }
            let mut csv = String::from("n,coefficient\n");
            for r in &rows {
                let _ = writeln!(csv, "{},{:.16e}", r[0] as usize, r[1]);
            }
            out.artifacts.push(artifact("response.csv", csv));
            out.artifacts
                .push(artifact("response.dat", dat_table("n coefficient", &rows)));
            #[derive(Serialize)]
            struct Summary {
                xi0: f64,
                modes: Vec<usize>,
                coefficients: Vec<f64>,
                target: f64,
            }
            out.artifacts.push(artifact(
                "summary.json",
                serde_json::to_string_pretty(&Summary {
                    xi0,
                    modes,
                    coefficients: coeffs,
                    target: -0.25,
                })
                .expect("serialize")
                    + "\n",
            ));
        }
        other => {
            return Err(Error::Config(format!(
                "unknown cross-section task {other:?}: modes | oracle | response"
            )))
        }
    }
    Ok(out)
}

// -------------------------------------------------------------- effective

pub fn run_effective(cfg: &RawConfig, seed: u64) -> Result<RunOutput> {
    let _ = seed;
    let j_max = cfg.usize_opt("effective", "j_max")?.unwrap_or(3);
    // either a ready-made potential table or the curve/section pipeline
    let (pot, n, cn_value) = match cfg.get("effective", "potential_file") {
        Some(path) => {
            let p = match &cfg.base_dir {
                Some(d) => d.join(path),
                None => std::path::PathBuf::from(path),
            };
            let pot = crate::effective_operator::EffectivePotential::from_csv(
                &std::fs::read_to_string(&p)?,
            )?;
            (pot, 0, f64::NAN)
        }
        None => {
            let curve = cfg.curve()?;
            let shape = cfg.section_shape()?;
            let mesh = build_mesh(&shape, cfg.section_h()?)?;
            let n = cfg.usize_opt("effective", "n")?.unwrap_or(0);
            let spectrum = dirichlet_eigenpairs(&mesh, n + 1)?;
            spectrum.require_simple(n)?;
            let cn = twist_coefficient(&mesh, &spectrum.pairs[n], n);
            (effective_potential(&curve, cn), n, cn.value)
        }
    };

    let (s0, s1) = (pot.s_grid[0], *pot.s_grid.last().unwrap());
    let cells = pot.s_grid.len() - 1;
    let spec1d = schrodinger_eigen(&pot, (s0, s1), cells, j_max)?;

    let halfwidth = cfg.f64_opt("effective", "halfwidth")?.unwrap_or(20.0);
    let hline = cfg
        .f64_opt("effective", "h")?
        .unwrap_or(pot.s_grid[1] - pot.s_grid[0]);
    // center the support for the truncated-line bound-state check
    let mut centered = pot.clone();
    let mid = 0.5 * (s0 + s1);
    for s in &mut centered.s_grid {
        *s -= mid;
    }
    let bound = bound_state_exists(&centered, halfwidth, hline)?;

    let mut out = RunOutput {
        artifacts: vec![],
        lines: vec![],
    };
    out.artifacts.push(artifact("potential.csv", pot.to_csv()));
    out.artifacts
        .push(artifact("spectrum.csv", spec1d.to_csv()));
    let prow: Vec<Vec<f64>> = pot
        .s_grid
        .iter()
        .zip(&pot.values)
        .map(|(s, v)| vec![*s, *v])
        .collect();
    out.artifacts
        .push(artifact("potential.dat", dat_table("s V", &prow)));
    #[derive(Serialize)]
    struct Summary {
        mode: usize,
        twist_coefficient: f64,
        mean_potential: f64,
        mu: Vec<f64>,
        bound_state: bool,
        lowest_truncated: f64,
    }
    out.artifacts.push(artifact(
        "summary.json",
        serde_json::to_string_pretty(&Summary {
            mode: n,
            twist_coefficient: cn_value,
            mean_potential: pot.integral(),
            mu: spec1d.mu.clone(),
            bound_state: bound.0,
            lowest_truncated: bound.1,
        })
        .expect("serialize")
            + "\n",
    ));
    if cn_value.is_finite() {
        out.lines.push(format!("C_{n} = {cn_value:.8}"));
    }
    for (j, m) in spec1d.mu.iter().enumerate() {
        out.lines.push(format!("mu_{j} = {m:.10}"));
    }
    out.lines
        .push(format!("bound state on the line: {}", bound.0));
    Ok(out)
}

// ------------------------------------------------------------------- tube

pub fn run_tube(cfg: &RawConfig, seed: u64) -> Result<RunOutput> {
    match cfg.get("tube", "task").unwrap_or("confinement") {
        "confinement" => run_tube_confinement(cfg),
        "leak" => run_tube_leak(cfg),
        "invariants" => run_invariants(cfg, seed),
        other => Err(Error::Config(format!(
            "unknown tube task {other:?}: confinement | leak | invariants"
        ))),
    }
}

fn run_tube_confinement(cfg: &RawConfig) -> Result<RunOutput> {
    let curve = cfg.curve()?;
    let mesh = build_mesh(&cfg.section_shape()?, cfg.section_h()?)?;
    let n = cfg.usize_opt("tube", "n")?.unwrap_or(0);
    let j_max = cfg.usize_opt("tube", "j_max")?.unwrap_or(3);
    let eps_list = cfg.list_f64("tube", "eps")?;
    let spectrum = dirichlet_eigenpairs(&mesh, n + 2)?;
    let study = confinement_study(&curve, &mesh, &spectrum, n, &eps_list, j_max)?;

    let mut out = RunOutput {
        artifacts: vec![],
        lines: vec![],
    };
    out.artifacts
        .push(artifact("confinement.csv", confinement_csv(&study)));
    out.artifacts
        .push(artifact("summary.json", confinement_summary_json(&study)));
    // .dat: one row per eps, diff column per mode
    let rows: Vec<Vec<f64>> = eps_list
        .iter()
        .map(|&e| {
            let mut row = vec![e];
            for j in 0..j_max {
                let d = study
                    .rows
                    .iter()
                    .find(|r| r.eps == e && r.j == j)
                    .map(|r| r.diff)
                    .unwrap_or(f64::NAN);
                row.push(d);
            }
            row
        })
        .collect();
    out.artifacts.push(artifact(
        "confinement.dat",
        dat_table("eps diff_j...", &rows),
    ));
    for r in &study.rows {
        out.lines.push(format!(
            "eps = {:>5.3}  j = {}  tube {:+.8}  effective {:+.8}  |diff| {:.3e}  overlap {:.6}",
            r.eps, r.j, r.eig_tube, r.mu_eff, r.diff, r.overlap
        ));
    }
    Ok(out)
}

fn run_tube_leak(cfg: &RawConfig) -> Result<RunOutput> {
    let curve = cfg.curve()?;
    let mesh = build_mesh(&cfg.section_shape()?, cfg.section_h()?)?;
    let n = cfg.usize_opt("tube", "n")?.unwrap_or(1);
    let j = cfg.usize_opt("tube", "j")?.unwrap_or(0);
    let eps_list = cfg.list_f64("tube", "eps")?;
    let spectrum = dirichlet_eigenpairs(&mesh, n.max(j) + 1)?;
    let n_s = curve.len() - 1;
    let h = curve.spacing();
    let length = *curve.s_grid().last().unwrap() - curve.s_grid()[0];
    // deterministic unit-norm test profile: the fundamental box mode
    let mut w: Vec<f64> = (0..n_s)
        .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) * h / length).sin())
        .collect();
    let nrm = (w.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
    w.iter_mut().for_each(|x| *x /= nrm);

    let mut rows = Vec::new();
    for &eps in &eps_list {
        let asm = assemble_form(&curve, &mesh, &spectrum, eps, n)?;
        let v = leak_estimate(&asm, &mesh, &w, &spectrum.pairs[j])?;
        rows.push(vec![eps, v]);
    }
    let target = spectrum.lambda(j) - spectrum.lambda(n);
    let extrapolated = if rows.len() >= 3 {
        let f = |i: usize| rows[i][1];
        let g1 = (4.0 * f(1) - f(0)) / 3.0;
        let g2 = (4.0 * f(2) - f(1)) / 3.0;
        (16.0 * g2 - g1) / 15.0
    } else if rows.len() == 2 {
        (4.0 * rows[1][1] - rows[0][1]) / 3.0
    } else {
        rows[0][1]
    };

    let mut out = RunOutput {
        artifacts: vec![],
        lines: vec![],
    };
    let mut csv = String::from("eps,value\n");
    for r in &rows {
        let _ = writeln!(csv, "{:.16e},{:.16e}", r[0], r[1]);
    }
    out.artifacts.push(artifact("leak.csv", csv));
    out.artifacts
        .push(artifact("leak.dat", dat_table("eps value", &rows)));
    #[derive(Serialize)]
    struct Summary {
        sector: usize,
        source_mode: usize,
        target: f64,
        extrapolated: f64,
        relative_miss: f64,
    }
    let rel = ((extrapolated - target) / target).abs();
    out.artifacts.push(artifact(
        "summary.json",
        serde_json::to_string_pretty(&Summary {
            sector: n,
            source_mode: j,
            target,
            extrapolated,
            relative_miss: rel,
        })
        .expect("serialize")
            + "\n",
    ));
    out.lines.push(format!(
        "extrapolated {extrapolated:.8} vs lambda_{j} - lambda_{n} = {target:.8} (rel {rel:.3e})"
    ));
    Ok(out)
}

// ------------------------------------------------------------ broken line

pub fn run_broken_line(cfg: &RawConfig, seed: u64) -> Result<RunOutput> {
    let _ = seed;
    let bases_raw = cfg.require("broken-line", "bases")?;
    let nodes = cfg.usize_opt("broken-line", "nodes")?.unwrap_or(2001);
    let delta_list = cfg.list_f64("broken-line", "delta")?;
    let k_list = cfg.list_f64("broken-line", "k")?;
    let oracle_factor = cfg.usize_opt("broken-line", "oracle_factor")?.unwrap_or(10);

    let mut out = RunOutput {
        artifacts: vec![],
        lines: vec![],
    };
    for base_name in bases_raw.split_whitespace() {
        let (tag, base) = build_base(base_name, nodes)?;
        let study = delta_convergence_study(&base, &delta_list, &k_list)?;
        out.artifacts.push(artifact(
            &format!("{tag}_study.csv"),
            delta_study_csv(&study),
        ));
        let rows: Vec<Vec<f64>> = study
            .max_deviation
            .iter()
            .map(|(d, v)| vec![*d, *v])
            .collect();
        out.artifacts.push(artifact(
            &format!("{tag}_deviation.dat"),
            dat_table("delta max_deviation", &rows),
        ));

        #[derive(Serialize)]
        struct Classification {
            resonant: bool,
            mean_branch: String,
            c1: Option<f64>,
            c2: Option<f64>,
            w_kernel: Option<f64>,
            fitted_rate: f64,
            oracle_c1: Option<f64>,
            oracle_rel_diff: Option<f64>,
        }
        let (resonant, c1, c2) = match study.report.condition {
            VertexCondition::Dirichlet => (false, None, None),
            VertexCondition::ScaledCoupling { c1, c2 } => (true, Some(c1), Some(c2)),
        };
        // independent oracle at higher resolution for the coupling
        let (oracle_c1, oracle_rel) = if resonant && oracle_factor > 1 {
            let fine_nodes = (nodes - 1) * oracle_factor + 1;
            let (_, fine) = build_base(base_name, fine_nodes)?;
            let st = detect_resonance(&fine);
            let rep = broken_line::vertex_coefficients(&fine, &st)?;
            match (rep.condition, c1) {
                (VertexCondition::ScaledCoupling { c1: oc1, .. }, Some(c)) => {
                    (Some(oc1), Some(((c - oc1) / oc1).abs()))
                }
                _ => (None, None),
            }
        } else {
            (None, None)
        };
        let classification = Classification {
            resonant,
            mean_branch: match study.report.branch {
                MeanBranch::Zero => "zero".into(),
                MeanBranch::NonZero => "nonzero".into(),
            },
            c1,
            c2,
            w_kernel: study.report.w_kernel,
            fitted_rate: study.fitted_rate,
            oracle_c1,
            oracle_rel_diff: oracle_rel,
        };
        out.artifacts.push(artifact(
            &format!("{tag}_classification.json"),
            serde_json::to_string_pretty(&classification).expect("serialize") + "\n",
        ));
        out.lines.push(format!(
            "{tag}: resonant = {resonant}, branch = {:?}, rate = {:.2}, worst dev @ smallest delta = {:.3e}",
            study.report.branch,
            study.fitted_rate,
            study.max_deviation.last().map(|x| x.1).unwrap_or(f64::NAN)
        ));
    }
    Ok(out)
}

/// Base potentials addressable from configs: `square-well:V0`,
/// `curvature-bump`, `zero-mean`.
pub fn build_base(
    name: &str,
    nodes: usize,
) -> Result<(String, crate::effective_operator::EffectivePotential)> {
    if let Some(v0s) = name.strip_prefix("square-well:") {
        let v0: f64 = v0s
            .parse()
            .map_err(|_| Error::Config(format!("bad square-well depth {v0s:?}")))?;
        // align the jumps with the dual-cell walls
        let m_inside = (nodes / 2).max(8);
        let pad = (m_inside / 4).max(2);
        let tag = format!("square_well_{}", v0s.replace('.', "p"));
        return Ok((tag, square_well(v0, m_inside, pad)));
    }
    match name {
        "curvature-bump" => {
            // effective potential of a planar curvature bump, support in (-1, 1)
            let curve = crate::geometry::presets::bump_curve(2.0, 1.0, 0.8, 2.0, nodes);
            let mut pot = effective_potential(&curve, TwistCoefficient { n: 0, value: 0.0 });
            for s in &mut pot.s_grid {
                *s -= 1.0;
            }
            Ok(("curvature_bump".into(), pot))
        }
        "zero-mean" => {
            let pot = construct_zero_mean_resonant(TwistCoefficient { n: 0, value: 1.0 }, nodes)?;
            Ok(("zero_mean".into(), pot))
        }
        other => Err(Error::Config(format!(
            "unknown base {other:?}: square-well:V0 | curvature-bump | zero-mean"
        ))),
    }
}

// -------------------------------------------------------------- gamma lab

pub fn run_gamma_lab(cfg: &RawConfig, seed: u64) -> Result<RunOutput> {
    let families = cfg.usize_opt("gamma-lab", "families")?.unwrap_or(30);
    let dim_fixed = cfg.usize_opt("gamma-lab", "dim")?;
    let dim_max = cfg.usize_opt("gamma-lab", "dim_max")?.unwrap_or(50).max(4);
    let eps_list = cfg.list_f64("gamma-lab", "eps")?;
    let lambda = cfg.f64_opt("gamma-lab", "lambda")?.unwrap_or(1.0);
    let samples = cfg.usize_opt("gamma-lab", "samples")?.unwrap_or(4);
    let tol = cfg.f64_opt("gamma-lab", "tol")?.unwrap_or(0.05);
    let family_filter = cfg
        .get("gamma-lab", "family")
        .map(FamilyKind::parse)
        .transpose()?;

    let mut rng = SplitMix64::new(seed);
    let mut csv = String::from(
        "trial,kind,dim,minima_holds,resolvents_holds,agree,minimizer_residual,sup_gap\n",
    );
    let mut all_agree = true;
    let mut worst_residual = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut convergent_verdicts = 0usize;
    for trial in 0..families {
        let kind = match family_filter {
            Some(k) => k,
            None => match trial % 3 {
                0 => FamilyKind::Perturbation,
                1 => FamilyKind::Penalization,
                _ => FamilyKind::Oscillation,
            },
        };
        let dim = dim_fixed
            .unwrap_or_else(|| 4 + (rng.next_u64() as usize) % (dim_max - 3))
            .max(2);
        let fam_seed = rng.next_u64();
        let seq = generate_family(kind, dim, &eps_list, fam_seed);
        let rep = check_equivalence_iv_v(&seq, lambda, samples, tol, fam_seed ^ 0xabcd)?;
        all_agree &= rep.agree;
        if rep.minima.holds {
            convergent_verdicts += 1;
        }

        // minimizer identity and sup-representation on the limit operator
        let eta = nalgebra::DVector::from_vec(rng.unit_vector(dim));
        let residual = minimizer_identity(&seq.limit, &seq.p0, &eta)?;
        worst_residual = worst_residual.max(residual);
        let z = &seq.p0 * nalgebra::DVector::from_vec(rng.unit_vector(dim));
        let mut sample_set: Vec<nalgebra::DVector<f64>> = (0..6)
            .map(|_| &seq.p0 * nalgebra::DVector::from_vec(rng.unit_vector(dim)))
            .collect();
        sample_set.push(z.clone());
        let (_, gap) = sup_representation(&seq.limit, &seq.p0, &z, &sample_set);
        worst_gap = worst_gap.max(gap.abs());

        let _ = writeln!(
            csv,
            "{trial},{:?},{dim},{},{},{},{:.3e},{:.3e}",
            kind, rep.minima.holds, rep.resolvents.holds, rep.agree, residual, gap
        );
    }

    #[derive(Serialize)]
    struct Summary {
        families: usize,
        all_agree: bool,
        convergent_verdicts: usize,
        worst_minimizer_residual: f64,
        worst_attained_gap: f64,
    }
    let mut out = RunOutput {
        artifacts: vec![],
        lines: vec![],
    };
    out.artifacts.push(artifact("families.csv", csv));
    out.artifacts.push(artifact(
        "summary.json",
        serde_json::to_string_pretty(&Summary {
            families,
            all_agree,
            convergent_verdicts,
            worst_minimizer_residual: worst_residual,
            worst_attained_gap: worst_gap,
        })
        .expect("serialize")
            + "\n",
    ));
    out.lines.push(format!(
        "{families} families: criteria agree on all = {all_agree}, worst minimizer residual {worst_residual:.3e}, worst attained gap {worst_gap:.3e}"
    ));
    if !all_agree {
        return Err(Error::NonConvergent(
            "equivalence criteria disagreed on a family".into(),
        ));
    }
    Ok(out)
}

// -------------------------------------------------------------- invariants

fn run_invariants(cfg: &RawConfig, seed: u64) -> Result<RunOutput> {
    let mut checks: Vec<(String, bool, String)> = Vec::new();
    let mut rng = SplitMix64::new(seed);

    // frame orthonormality along a helix
    let curve = cfg.curve()?;
    let frame = build_frame(&curve)?;
    let defect = frame.orthonormality_defect().max(frame.binormal_defect());
    checks.push((
        "frame_orthonormality".into(),
        defect < 1e-8,
        format!("worst defect {defect:.3e}"),
    ));

    // metric determinant and Jacobian identity on random samples
    let mut worst_det = 0.0f64;
    let mut worst_jac = 0.0f64;
    let (s0, s1) = (curve.s_grid()[0], *curve.s_grid().last().unwrap());
    for _ in 0..50 {
        let s = s0 + (s1 - s0) * rng.next_f64();
        let y = [rng.next_sym(), rng.next_sym()];
        let eps = 0.05 + 0.2 * rng.next_f64();
        let m = metric_at(&curve, eps, s, y)?;
        worst_det = worst_det.max((m.g.determinant().abs() - m.det_g).abs());
        let j = jacobian_at(&curve, eps, s, y)?;
        worst_jac = worst_jac.max((j * j.transpose() - m.g).norm());
    }
    checks.push((
        "metric_determinant".into(),
        worst_det < 1e-12,
        format!("worst |det G - eps^4 beta^2| = {worst_det:.3e}"),
    ));
    checks.push((
        "jacobian_identity".into(),
        worst_jac < 1e-12,
        format!("worst |JJ^T - G| = {worst_jac:.3e}"),
    ));

    // gauge invariance of a small assembly under (tau, alpha') -> (+g, +g)
    {
        let pi = std::f64::consts::PI;
        let mesh = build_mesh(
            &SectionShape::Rectangle {
                a: pi,
                b: pi / 2f64.sqrt(),
            },
            pi / 8.0,
        )?;
        let spec = dirichlet_eigenpairs(&mesh, 1)?;
        let n = 9;
        let s: Vec<f64> = (0..n).map(|i| i as f64 * 0.25).collect();
        let tau: Vec<f64> = (0..n).map(|i| 0.5 + 0.125 * (i % 3) as f64).collect();
        let ad: Vec<f64> = (0..n).map(|i| 0.25 - 0.0625 * (i % 2) as f64).collect();
        let c1 = CurveSpec::new(
            s.clone(),
            vec![0.25; n],
            tau.clone(),
            vec![0.0; n],
            Some(ad.clone()),
        )?;
        let shift = 2.0;
        let c2 = CurveSpec::new(
            s,
            vec![0.25; n],
            tau.iter().map(|t| t + shift).collect(),
            vec![0.0; n],
            Some(ad.iter().map(|a| a + shift).collect()),
        )?;
        let a1 = assemble_form(&c1, &mesh, &spec, 0.25, 0)?;
        let a2 = assemble_form(&c2, &mesh, &spec, 0.25, 0)?;
        let identical = a1.stiffness == a2.stiffness && a1.mass == a2.mass;
        checks.push((
            "twist_gauge_invariance".into(),
            identical,
            "assembly bit-identical under common shift of tau and alpha'".into(),
        ));
        let _ = SectorProjector::new(&spec, 0);
    }

    // scattering unitarity across a sweep
    {
        let base = square_well(3.7, 1200, 240);
        let mut worst = 0.0f64;
        for d in [1.0, 0.4, 0.15] {
            let sc = scale_potential(&base, d)?;
            for k in [0.05, 0.3, 1.0, 4.0] {
                let (r, t) = scattering_1d(&sc, k)?;
                worst = worst.max((r.norm_sqr() + t.norm_sqr() - 1.0).abs());
            }
        }
        checks.push((
            "scattering_unitarity".into(),
            worst < 1e-8,
            format!("worst | |r|^2 + |t|^2 - 1 | = {worst:.3e}"),
        ));
    }

    // resonance detection is scale covariant
    {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let resonant = square_well(pi2, 1500, 300);
        let plain = square_well(2.0, 1500, 300);
        let mut ok = detect_resonance(&resonant).resonant && !detect_resonance(&plain).resonant;
        for d in [0.5, 0.25] {
            ok &= detect_resonance(&scale_potential(&resonant, d)?).resonant;
            ok &= !detect_resonance(&scale_potential(&plain, d)?).resonant;
        }
        checks.push((
            "resonance_scale_covariance".into(),
            ok,
            "classification stable under delta in {0.5, 0.25}".into(),
        ));
    }

    #[derive(Serialize)]
    struct Row {
        name: String,
        pass: bool,
        detail: String,
    }
    let rows: Vec<Row> = checks
        .iter()
        .map(|(name, pass, detail)| Row {
            name: name.clone(),
            pass: *pass,
            detail: detail.clone(),
        })
        .collect();
    let mut out = RunOutput {
        artifacts: vec![],
        lines: vec![],
    };
    out.artifacts.push(artifact(
        "invariants.json",
        serde_json::to_string_pretty(&rows).expect("serialize") + "\n",
    ));
    let mut all = true;
    for (name, pass, detail) in &checks {
        all &= pass;
        out.lines.push(format!(
            "{}  {name}: {detail}",
            if *pass { "PASS" } else { "FAIL" }
        ));
    }
    if !all {
        return Err(Error::NonConvergent("structural invariant violated".into()));
    }
    Ok(out)
}

// ----------------------------------------------------------------- output

/// Write all artifacts plus the run manifest.
pub fn write_outputs(
    out_dir: &Path,
    subcommand: &str,
    cfg: &RawConfig,
    seed: u64,
    preset: Option<&str>,
    output: &RunOutput,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    #[derive(Serialize)]
    struct Manifest<'a> {
        tool: &'a str,
        version: &'a str,
        subcommand: &'a str,
        preset: Option<&'a str>,
        seed: u64,
        config_hash: String,
        artifacts: Vec<&'a str>,
    }
    let manifest = Manifest {
        tool: "tubelab",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        preset,
        seed,
        config_hash: cfg.hash(),
        artifacts: output.artifacts.iter().map(|a| a.name.as_str()).collect(),
    };
    for a in &output.artifacts {
        std::fs::write(out_dir.join(&a.name), &a.content)?;
    }
    std::fs::write(
        out_dir.join("run_manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("serialize") + "\n",
    )?;
    // keep the resolved config next to the outputs for reproducibility
    std::fs::write(out_dir.join("config.resolved"), &cfg.text)?;
    Ok(())
}
