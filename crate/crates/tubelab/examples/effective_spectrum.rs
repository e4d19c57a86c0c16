//! From tube geometry to the effective 1D operator.
//!
//! A planar curvature bump gives the attractive well `-kappa^2/4`; a
//! rotating section adds the repulsive twist term `(alpha')^2 C_n`.  The
//! demo assembles both potentials, solves the Dirichlet spectrum and runs
//! the truncation-stable bound-state check.
//!
//! ```text
//! cargo run --release --example effective_spectrum
//! ```

use std::f64::consts::PI;

use tubelab::cross_section::{build_mesh, dirichlet_eigenpairs, twist_coefficient, SectionShape};
use tubelab::effective_operator::{bound_state_exists, effective_potential, schrodinger_eigen};
use tubelab::geometry::presets;

fn main() {
    let mesh = build_mesh(
        &SectionShape::Rectangle {
            a: PI,
            b: PI / 2f64.sqrt(),
        },
        PI / 32.0,
    )
    .unwrap();
    let spec = dirichlet_eigenpairs(&mesh, 2).unwrap();

    // purely attractive: bent, untwisted
    let bent = presets::bump_curve(10.0, 5.0, 1.5, 1.5, 401);
    let c0 = twist_coefficient(&mesh, &spec.pairs[0], 0);
    let pot = effective_potential(&bent, c0);
    println!(
        "bent tube: V ranges [{:.4}, {:.4}], mean {:.4}",
        pot.values.iter().cloned().fold(f64::INFINITY, f64::min),
        pot.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        pot.integral()
    );
    let s1d = schrodinger_eigen(&pot, (0.0, 10.0), 400, 4).unwrap();
    println!("  Dirichlet spectrum on (0, 10): {:?}", s1d.mu);
    let mut centered = pot.clone();
    for s in &mut centered.s_grid {
        *s -= 5.0;
    }
    let (bound, mu0) = bound_state_exists(&centered, 20.0, 0.05).unwrap();
    println!("  bound state on the line: {bound} (lowest eigenvalue {mu0:.6})\n");

    // twisted straight tube in the second sector: repulsive potential
    let twisted = presets::twisted_straight(10.0, 5.0, 2.0, 1.0, 401);
    let c1 = twist_coefficient(&mesh, &spec.pairs[1], 1);
    let pot1 = effective_potential(&twisted, c1);
    println!(
        "twisted straight tube, sector 1: C_1 = {:.6}, V max = {:.4}",
        c1.value,
        pot1.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    );
    let s1d1 = schrodinger_eigen(&pot1, (0.0, 10.0), 400, 3).unwrap();
    println!("  Dirichlet spectrum on (0, 10): {:?}", s1d1.mu);
    let mut centered1 = pot1.clone();
    for s in &mut centered1.s_grid {
        *s -= 5.0;
    }
    let (bound1, mu1) = bound_state_exists(&centered1, 20.0, 0.05).unwrap();
    println!("  bound state on the line: {bound1} (lowest eigenvalue {mu1:.6})");
}
