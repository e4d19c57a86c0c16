//! Canned configurations, one per named study.
//!
//! Presets are ordinary config texts; `--preset NAME` loads one instead
//! of `--config PATH`, and the acceptance suite runs the `acc-*` family.

use crate::error::{Error, Result};

/// (name, subcommand, description, config text)
pub const PRESETS: &[(&str, &str, &str, &str)] = &[
    (
        "acc-1",
        "tube",
        "bounded-tube spectral convergence: planar bump curvature, sector 0",
        "[study]\nkind = tube\nseed = 11\n\n[curve]\npreset = bump\nlength = 10\ncenter = 5\nwidth = 1.5\namplitude = 1.5\nh = 0.0981747704246810\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.0981747704246810\n\n[tube]\ntask = confinement\nn = 0\neps = 0.2 0.1 0.05\nj_max = 3\n",
    ),
    (
        "acc-2",
        "tube",
        "higher-sector convergence: twisted straight tube, sector 1 deflated",
        "[study]\nkind = tube\nseed = 12\n\n[curve]\npreset = twisted\nlength = 10\ncenter = 5\nwidth = 2\namplitude = 1\nh = 0.1308996938995747\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.1308996938995747\n\n[tube]\ntask = confinement\nn = 1\neps = 0.2 0.1 0.05\nj_max = 3\n",
    ),
    (
        "acc-3",
        "tube",
        "sector leak: eps^2 b_1(w u_0) extrapolates to lambda_0 - lambda_1",
        "[study]\nkind = tube\nseed = 13\n\n[curve]\npreset = bump\nlength = 10\ncenter = 5\nwidth = 1.5\namplitude = 1.5\nh = 0.1308996938995747\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.1308996938995747\n\n[tube]\ntask = leak\nn = 1\nj = 0\neps = 0.2 0.1 0.05\n",
    ),
    (
        "acc-4",
        "cross-section",
        "curvature renormalization: quadratic response of lambda_n(xi) -> -1/4",
        "[study]\nkind = cross-section\nseed = 14\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.04908738521234052\n\n[cross-section]\ntask = response\nmodes = 0 1 2\nxi0 = 0.1\n",
    ),
    (
        "acc-5",
        "cross-section",
        "section oracles: rectangle eigenvalues, disc twist, square degeneracy",
        "[study]\nkind = cross-section\nseed = 15\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.02454369260617026\n\n[cross-section]\ntask = oracle\nmodes = 0 1 2\ndisc_h = 0.01\nsquare_h = 0.04908738521234052\n",
    ),
    (
        "acc-6",
        "broken-line",
        "broken-line limits: Dirichlet vs scaled-coupling scattering targets",
        "[study]\nkind = broken-line\nseed = 16\n\n[broken-line]\nbases = square-well:1.0 curvature-bump square-well:9.869604401089358 zero-mean\nnodes = 2001\ndelta = 0.4 0.2 0.1\nk = 0.1\noracle_factor = 10\n",
    ),
    (
        "acc-7",
        "gamma-lab",
        "form-convergence laboratory: criteria agreement on 100 seeded families",
        "[study]\nkind = gamma-lab\nseed = 17\n\n[gamma-lab]\nfamilies = 100\ndim_max = 50\neps = 0.1 0.05 0.025\nlambda = 1.0\nsamples = 4\ntol = 0.05\n",
    ),
    (
        "acc-8",
        "tube",
        "structural invariants: frame, metric determinant, gauge, unitarity, scale covariance",
        "[study]\nkind = tube\nseed = 18\n\n[curve]\npreset = helix\nlength = 3.141592653589793\nkappa = 1.3\ntau = 0.7\nh = 0.001\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.39269908169872414\n\n[tube]\ntask = invariants\n",
    ),
    (
        "straight-tube",
        "tube",
        "straight untwisted tube: exact separation demo",
        "[study]\nkind = tube\nseed = 1\n\n[curve]\npreset = straight\nlength = 10\nh = 0.1308996938995747\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.1308996938995747\n\n[tube]\ntask = confinement\nn = 0\neps = 0.2 0.1\nj_max = 3\n",
    ),
    (
        "bent-effective",
        "effective",
        "effective operator of the bump-curvature tube with bound-state check",
        "[study]\nkind = effective\nseed = 2\n\n[curve]\npreset = bump\nlength = 10\ncenter = 5\nwidth = 1.5\namplitude = 1.5\nh = 0.05\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.1308996938995747\n\n[effective]\nn = 0\nj_max = 4\nhalfwidth = 20\nh = 0.05\n",
    ),
    (
        "square-well-pi2",
        "broken-line",
        "resonant square well: full transmission in the broken-line limit",
        "[study]\nkind = broken-line\nseed = 3\n\n[broken-line]\nbases = square-well:9.869604401089358\nnodes = 2001\ndelta = 0.4 0.2 0.1\nk = 0.1 0.3\noracle_factor = 10\n",
    ),
    (
        "gamma-demo",
        "gamma-lab",
        "small laboratory run over all three family kinds",
        "[study]\nkind = gamma-lab\nseed = 4\n\n[gamma-lab]\nfamilies = 12\ndim_max = 24\neps = 0.1 0.05 0.025\nlambda = 1.0\nsamples = 4\ntol = 0.05\n",
    ),
];

pub fn find(
    name: &str,
) -> Result<&'static (&'static str, &'static str, &'static str, &'static str)> {
    PRESETS
        .iter()
        .find(|(n, _, _, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown preset {name:?}; see `tubelab presets`")))
}

pub fn listing() -> String {
    let mut out = String::new();
    for (name, sub, desc, _) in PRESETS {
        out.push_str(&format!("{name:<16} [{sub}]  {desc}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::RawConfig;

    #[test]
    fn all_presets_parse() {
        for (name, sub, _, text) in PRESETS {
            let cfg = RawConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.get("study", "kind"), Some(*sub), "{name}");
            if cfg.sections.contains_key("curve") {
                cfg.curve().unwrap_or_else(|e| panic!("{name}: {e}"));
            }
            if cfg.sections.contains_key("section") {
                cfg.section_shape()
                    .unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
        assert!(find("acc-1").is_ok());
        assert!(find("nope").is_err());
        assert!(listing().contains("acc-7"));
    }
}
