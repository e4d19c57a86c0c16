//! The broken-line limit and its vertex conditions.
//!
//! Scaling the geometry as `g(s) -> g(s/delta)/delta` concentrates the
//! effective potential while keeping the bend angle fixed.  The limit on
//! the two half-lines depends on a zero-energy resonance: without one the
//! edges decouple (Dirichlet, total reflection); with one a scaled
//! coupling `(c1, c2)` survives, and for an even well the transmission is
//! perfect.  The scattering of the scaled potentials at small wavenumber
//! is the observable that tells the limits apart.
//!
//! ```text
//! cargo run --release --example broken_line_limit
//! ```

use std::f64::consts::PI;

use tubelab::broken_line::{
    construct_zero_mean_resonant, delta_convergence_study, square_well, MeanBranch, VertexCondition,
};
use tubelab::cross_section::TwistCoefficient;

fn main() {
    let bases = [
        ("shallow square well (v0 = 1)", square_well(1.0, 1000, 250)),
        (
            "resonant square well (v0 = pi^2)",
            square_well(PI * PI, 1000, 250),
        ),
        (
            "zero-mean twisted bump (resonant by construction)",
            construct_zero_mean_resonant(TwistCoefficient { n: 0, value: 1.0 }, 2001).unwrap(),
        ),
    ];
    for (name, base) in &bases {
        println!("{name}: <V> = {:.4e}", base.integral());
        let study = delta_convergence_study(base, &[0.4, 0.2, 0.1], &[0.1, 0.3]).unwrap();
        match study.report.condition {
            VertexCondition::Dirichlet => println!("  limit: Dirichlet decoupling (r -> -1)"),
            VertexCondition::ScaledCoupling { c1, c2 } => {
                let (r, t) = study.report.condition.scattering();
                println!(
                    "  limit: scaled coupling c1 = {c1:.6}, c2 = {c2:.6} -> r = {r:.4}, t = {t:.4}"
                );
                if study.report.branch == MeanBranch::Zero {
                    println!(
                        "  zero-mean branch, kernel integral W = {:.4}",
                        study.report.w_kernel.unwrap()
                    );
                }
            }
        }
        for (d, dev) in &study.max_deviation {
            println!("  delta = {d:<4}: max |(r,t) - target| = {dev:.4e}");
        }
        println!(
            "  fitted convergence rate in delta: {:.2}\n",
            study.fitted_rate
        );
    }
}
