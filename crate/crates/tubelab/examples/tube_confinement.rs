//! The squeezing limit, watched numerically.
//!
//! The tube pencil in sector n is solved at a few thicknesses and
//! compared with the effective 1D operator on the same grids; the table
//! shows the eigenvalue differences shrinking (quadratically in eps) and
//! the eigenfunctions converging onto the separated states w_j(s) u_n(y).
//! Uses a moderate grid so it finishes in about a minute; the acceptance
//! suite runs the fine version.
//!
//! ```text
//! cargo run --release --example tube_confinement
//! ```

use std::f64::consts::PI;

use tubelab::cross_section::{build_mesh, dirichlet_eigenpairs, SectionShape};
use tubelab::geometry::presets;
use tubelab::tube3d::{confinement_csv, confinement_study};

fn main() {
    let h = PI / 16.0;
    let mesh = build_mesh(
        &SectionShape::Rectangle {
            a: PI,
            b: PI / 2f64.sqrt(),
        },
        h,
    )
    .unwrap();
    let spectrum = dirichlet_eigenpairs(&mesh, 2).unwrap();
    let nodes = (10.0 / h).round() as usize + 1;

    println!("bent tube (curvature bump), sector 0:");
    let curve = presets::bump_curve(10.0, 5.0, 1.5, 1.5, nodes);
    let study = confinement_study(&curve, &mesh, &spectrum, 0, &[0.2, 0.1, 0.05], 3).unwrap();
    print!("{}", confinement_csv(&study));
    println!(
        "fitted convergence orders per mode: {:?}",
        study.fitted_order
    );

    println!("\ntwisted straight tube, sector 1 (deflated):");
    let spectrum1 = dirichlet_eigenpairs(&mesh, 3).unwrap();
    let twisted = presets::twisted_straight(10.0, 5.0, 2.0, 1.0, nodes);
    let study1 = confinement_study(&twisted, &mesh, &spectrum1, 1, &[0.2, 0.1], 2).unwrap();
    print!("{}", confinement_csv(&study1));
    println!(
        "fitted convergence orders per mode: {:?}",
        study1.fitted_order
    );
}
