//! Energy leak between sectors.
//!
//! For a separated state `w(s) u_j(y)` analyzed with the sector-n form,
//! `eps^2 b_n(w u_j)` tends to `lambda_j - lambda_n`: negative toward
//! lower sectors (the instability that forces deflation), positive toward
//! higher ones, and exactly the twist energy for j = n.
//!
//! ```text
//! cargo run --release --example sector_leak
//! ```

use std::f64::consts::PI;

use tubelab::cross_section::{build_mesh, dirichlet_eigenpairs, SectionShape};
use tubelab::geometry::presets;
use tubelab::tube3d::{assemble_form, leak_estimate};

fn main() {
    let mesh = build_mesh(
        &SectionShape::Rectangle {
            a: PI,
            b: PI / 2f64.sqrt(),
        },
        PI / 16.0,
    )
    .unwrap();
    let spectrum = dirichlet_eigenpairs(&mesh, 3).unwrap();
    let curve = presets::bump_curve(10.0, 5.0, 1.5, 1.5, 121);
    let n_s = curve.len() - 1;
    let h = curve.spacing();
    let mut w: Vec<f64> = (0..n_s)
        .map(|i| (PI * (i as f64 + 0.5) * h / 10.0).sin())
        .collect();
    let nrm = (w.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
    w.iter_mut().for_each(|x| *x /= nrm);

    println!("sector n = 1 probed with w(s) u_j(y):");
    for j in [0usize, 1, 2] {
        let target = spectrum.lambda(j) - spectrum.lambda(1);
        print!("  j = {j} (target {target:+.6}): ");
        let mut vals = Vec::new();
        for eps in [0.2, 0.1, 0.05] {
            let asm = assemble_form(&curve, &mesh, &spectrum, eps, 1).unwrap();
            vals.push(leak_estimate(&asm, &mesh, &w, &spectrum.pairs[j]).unwrap());
        }
        let g1 = (4.0 * vals[1] - vals[0]) / 3.0;
        let g2 = (4.0 * vals[2] - vals[1]) / 3.0;
        let extrap = (16.0 * g2 - g1) / 15.0;
        println!(
            "eps^2 b_1 = {:+.6} / {:+.6} / {:+.6}  -> extrapolated {extrap:+.6}",
            vals[0], vals[1], vals[2]
        );
    }
}
