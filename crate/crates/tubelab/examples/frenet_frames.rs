//! Frame integration along closed-form curves: accuracy against the
//! analytic circle and helix frames, orthonormality drift, and the
//! observed order of the one-step scheme.
//!
//! ```text
//! cargo run --release --example frenet_frames
//! ```

use std::f64::consts::PI;

use nalgebra::Vector3;
use tubelab::geometry::{build_frame, metric_at, presets, validate_tube};

fn circle_error(h: f64) -> f64 {
    let n = (PI / h).round() as usize + 1;
    let curve = presets::circular_arc(1.0, PI, n);
    let frame = build_frame(&curve).unwrap();
    let mut worst = 0.0f64;
    for (i, &s) in curve.s_grid().iter().enumerate() {
        let exact_t = Vector3::new(s.cos(), s.sin(), 0.0);
        worst = worst.max((frame.t[i] - exact_t).norm());
    }
    worst
}

fn main() {
    println!("unit circle, frame error vs closed form:");
    let mut prev: Option<f64> = None;
    for h in [0.04, 0.02, 0.01, 0.005] {
        let err = circle_error(h);
        let order = prev.map(|p| (p / err).log2()).unwrap_or(f64::NAN);
        println!("  h = {h:<7} error = {err:.3e}   observed order = {order:.2}");
        prev = Some(err);
    }

    let n = 4001;
    let helix = presets::helix(1.3, 0.7, PI, n);
    let frame = build_frame(&helix).unwrap();
    println!("\nhelix (kappa = 1.3, tau = 0.7), {n} nodes:");
    println!(
        "  orthonormality defect: {:.3e}",
        frame.orthonormality_defect()
    );
    println!(
        "  binormal defect |B - T x N|: {:.3e}",
        frame.binormal_defect()
    );

    // the metric at a sample point, and the diffeomorphism margin
    let m = metric_at(&helix, 0.1, 1.0, [0.3, -0.2]).unwrap();
    println!("\nmetric at s = 1, y = (0.3, -0.2), eps = 0.1:");
    println!(
        "  beta = {:.6}, det G = {:.6e} (eps^4 beta^2 = {:.6e})",
        m.beta,
        m.g.determinant().abs(),
        m.det_g
    );
    for eps in [0.2, 0.5, 0.9] {
        let v = validate_tube(&helix, eps, 1.0);
        println!(
            "  eps = {eps}: min beta = {:.4} -> {}",
            v.min_beta,
            if v.ok { "tube ok" } else { "degenerate" }
        );
    }
}
