//! Command-line entry point.
//!
//! One process runs one study: a subcommand picks the pipeline, the
//! configuration comes from `--config PATH` or a named `--preset`, and
//! every artifact lands in `--out DIR` together with a run manifest
//! (config hash, tool version) and the resolved config.  Outputs are
//! bit-identical for a fixed config and seed.

pub mod config;
pub mod presets;
pub mod runners;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use config::RawConfig;

#[derive(Parser)]
#[command(
    name = "tubelab",
    version,
    about = "Spectral studies of squeezed Dirichlet tubes: cross-section modes, effective 1D operators, bounded-tube confinement, broken-line limits and a form-convergence laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file (see the presets for the format).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Named preset (see `tubelab presets`).
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Output directory for the artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// RNG seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet eigenmodes, twist coefficients and the weighted response
    /// of the cross section.
    CrossSection,
    /// Effective 1D potential and spectrum on the curve.
    Effective,
    /// Squeezed-tube studies: confinement table, sector leak, invariants.
    Tube,
    /// Broken-line limit: resonance classification and scattering study.
    BrokenLine,
    /// Finite-dimensional form-convergence laboratory.
    GammaLab {
        /// Family generator (perturbation | penalization | oscillation);
        /// builds an ad-hoc config when no --config/--preset is given.
        #[arg(long)]
        family: Option<String>,
        /// Dimension for the ad-hoc family.
        #[arg(long)]
        dim: Option<usize>,
        /// Eps values for the ad-hoc family, comma or space separated.
        #[arg(long, value_name = "LIST")]
        eps_list: Option<String>,
    },
    /// List the built-in presets.
    Presets,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CrossSection => "cross-section",
            Command::Effective => "effective",
            Command::Tube => "tube",
            Command::BrokenLine => "broken-line",
            Command::GammaLab { .. } => "gamma-lab",
            Command::Presets => "presets",
        }
    }
}

fn load_config(cli: &Cli, subcommand: &str) -> Result<(RawConfig, Option<String>)> {
    match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => Err(Error::Config(
            "pass either --config or --preset, not both".into(),
        )),
        (Some(path), None) => Ok((RawConfig::from_file(path)?, None)),
        (None, Some(name)) => {
            let (pname, sub, _, text) = presets::find(name)?;
            if *sub != subcommand {
                return Err(Error::Config(format!(
                    "preset {pname:?} belongs to subcommand `{sub}`, not `{subcommand}`"
                )));
            }
            Ok((RawConfig::parse(text)?, Some(pname.to_string())))
        }
        (None, None) => {
            // the laboratory can be driven entirely from flags
            if let Command::GammaLab {
                family,
                dim,
                eps_list,
            } = &cli.command
            {
                if family.is_some() || dim.is_some() || eps_list.is_some() {
                    let fam = family.clone().unwrap_or_else(|| "perturbation".into());
                    let d = dim.unwrap_or(12);
                    let eps = eps_list
                        .clone()
                        .unwrap_or_else(|| "0.1 0.05 0.025".into())
                        .replace(',', " ");
                    let text = format!(
                        "[study]\nkind = gamma-lab\nseed = 1\n\n[gamma-lab]\nfamily = {fam}\nfamilies = 10\ndim_max = {d}\neps = {eps}\n"
                    );
                    return Ok((RawConfig::parse(&text)?, None));
                }
            }
            Err(Error::Config(
                "a study needs --config PATH or --preset NAME".into(),
            ))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let sub = cli.command.name();
    if matches!(cli.command, Command::Presets) {
        print!("{}", presets::listing());
        return Ok(());
    }
    if cli.threads > 0 {
        // best effort; a second initialization in the same process is fine
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let (cfg, preset) = load_config(cli, sub)?;
    if let Some(kind) = cfg.get("study", "kind") {
        if kind != sub {
            return Err(Error::Config(format!(
                "config declares kind = {kind}, but the `{sub}` subcommand was invoked"
            )));
        }
    }
    let seed = cfg.seed(cli.seed);
    let output = match cli.command {
        Command::CrossSection => runners::run_cross_section(&cfg, seed)?,
        Command::Effective => runners::run_effective(&cfg, seed)?,
        Command::Tube => runners::run_tube(&cfg, seed)?,
        Command::BrokenLine => runners::run_broken_line(&cfg, seed)?,
        Command::GammaLab { .. } => runners::run_gamma_lab(&cfg, seed)?,
        Command::Presets => unreachable!(),
    };
    runners::write_outputs(&cli.out, sub, &cfg, seed, preset.as_deref(), &output)?;
    for line in &output.lines {
        println!("{line}");
    }
    println!("artifacts written to {}", cli.out.display());
    Ok(())
}

/// Binary entry: returns the process exit code (0 ok, 1 validation,
/// 2 numerical failure).
pub fn main_impl() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_subcommand_mismatch_is_flagged() {
        let cli = Cli {
            command: Command::Tube,
            config: None,
            preset: Some("acc-4".into()),
            out: PathBuf::from("out"),
            seed: None,
            threads: 0,
        };
        match load_config(&cli, "tube") {
            Err(Error::Config(msg)) => assert!(msg.contains("cross-section")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn config_and_preset_are_mutually_exclusive() {
        let cli = Cli {
            command: Command::Tube,
            config: Some(PathBuf::from("x")),
            preset: Some("acc-1".into()),
            out: PathBuf::from("out"),
            seed: None,
            threads: 0,
        };
        assert!(load_config(&cli, "tube").is_err());
    }
}
