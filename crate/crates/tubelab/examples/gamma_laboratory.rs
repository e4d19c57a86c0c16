//! Matrix laboratory for form convergence.
//!
//! Three family types: smooth perturbations (full-space limit),
//! penalizations (a block is pushed to infinite energy, the limit lives on
//! the kept subspace, the same mechanism that squeezes a tube onto its
//! curve), and oscillations (no limit).  For each family the perturbed
//! minima and the resolvents either both converge or both fail.
//!
//! ```text
//! cargo run --release --example gamma_laboratory
//! ```

use nalgebra::DVector;
use tubelab::gamma_forms::{
    check_equivalence_iv_v, generate_family, min_perturbed, minimizer_convergence, FamilyKind,
};
use tubelab::rng::SplitMix64;

fn main() {
    let eps = [0.1, 0.05, 0.025, 0.0125];
    for kind in [
        FamilyKind::Perturbation,
        FamilyKind::Penalization,
        FamilyKind::Oscillation,
    ] {
        let seq = generate_family(kind, 10, &eps, 99);
        let rep = check_equivalence_iv_v(&seq, 1.0, 4, 0.05, 7).unwrap();
        println!("{kind:?} family (dim 10):");
        println!(
            "  minima criterion: {} {:?}",
            if rep.minima.holds { "holds" } else { "fails" },
            rep.minima
                .deviations
                .iter()
                .map(|(e, d)| format!("{e}:{d:.2e}"))
                .collect::<Vec<_>>()
        );
        println!(
            "  resolvent criterion: {} (criteria agree: {})",
            if rep.resolvents.holds {
                "holds"
            } else {
                "fails"
            },
            rep.agree
        );
    }

    // one family in detail: minimizers tracking the projected limit
    let seq = generate_family(FamilyKind::Penalization, 8, &[0.1, 0.01, 0.001], 5);
    let eta = DVector::from_vec(SplitMix64::new(3).unit_vector(8));
    let track = minimizer_convergence(&seq, 1.0, &eta).unwrap();
    println!("\npenalized family, distance of minimizers to the projected limit:");
    for (e, d) in &track.distances {
        println!("  eps = {e:<6} |zeta_eps - zeta| = {d:.4e}");
    }
    let (val, arg) = min_perturbed(&seq.limit, 1.0, &eta).unwrap();
    println!(
        "limit functional: min value {val:.6} at |zeta| = {:.6}",
        arg.norm()
    );
}
