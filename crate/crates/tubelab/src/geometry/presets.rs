//! Closed-form curve presets.
//!
//! All presets sample on the uniform grid `[0, length]` with `n` nodes
//! (use an odd `n` to place a node at the midpoint).  The bump profile is
//! the standard smooth compactly supported mollifier
//! `exp(1 - 1/(1 - t^2))` on `|t| < 1`, scaled to peak amplitude.

use super::CurveSpec;

/// Smooth bump: peak 1 at t = 0, identically zero for |t| >= 1.
pub fn smooth_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

fn grid(length: f64, n: usize) -> Vec<f64> {
    let h = length / (n - 1) as f64;
    (0..n).map(|i| i as f64 * h).collect()
}

/// Straight line: kappa = tau = alpha = 0.
pub fn straight(length: f64, n: usize) -> CurveSpec {
    let s = grid(length, n);
    CurveSpec::new(
        s,
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        Some(vec![0.0; n]),
    )
    .expect("preset grids are valid")
}

/// Planar arc of constant curvature.
pub fn circular_arc(kappa0: f64, length: f64, n: usize) -> CurveSpec {
    let s = grid(length, n);
    CurveSpec::new(
        s,
        vec![kappa0; n],
        vec![0.0; n],
        vec![0.0; n],
        Some(vec![0.0; n]),
    )
    .expect("preset grids are valid")
}

/// Planar curve with a smooth curvature bump centered at `center`,
/// half-width `width`, peak `amplitude`; straight outside the bump.
pub fn bump_curve(length: f64, center: f64, width: f64, amplitude: f64, n: usize) -> CurveSpec {
    let s = grid(length, n);
    let kappa: Vec<f64> = s
        .iter()
        .map(|&x| amplitude * smooth_bump((x - center) / width))
        .collect();
    CurveSpec::new(s, kappa, vec![0.0; n], vec![0.0; n], Some(vec![0.0; n]))
        .expect("preset grids are valid")
}

/// Circular helix with constant curvature and torsion.
pub fn helix(kappa0: f64, tau0: f64, length: f64, n: usize) -> CurveSpec {
    let s = grid(length, n);
    CurveSpec::new(
        s,
        vec![kappa0; n],
        vec![tau0; n],
        vec![0.0; n],
        Some(vec![0.0; n]),
    )
    .expect("preset grids are valid")
}

/// Straight centerline whose cross section spins with a smooth bump in the
/// rotation rate: kappa = tau = 0, alpha' = amplitude * bump.
///
/// The angle itself is accumulated by trapezoid quadrature; with a
/// straight centerline only the rate enters any operator.
pub fn twisted_straight(
    length: f64,
    center: f64,
    width: f64,
    amplitude: f64,
    n: usize,
) -> CurveSpec {
    let s = grid(length, n);
    let h = s[1] - s[0];
    let ad: Vec<f64> = s
        .iter()
        .map(|&x| amplitude * smooth_bump((x - center) / width))
        .collect();
    let mut alpha = vec![0.0; n];
    for i in 1..n {
        alpha[i] = alpha[i - 1] + 0.5 * h * (ad[i - 1] + ad[i]);
    }
    CurveSpec::new(s, vec![0.0; n], vec![0.0; n], alpha, Some(ad)).expect("preset grids are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_smooth_and_compact() {
        assert_eq!(smooth_bump(1.0), 0.0);
        assert_eq!(smooth_bump(-1.5), 0.0);
        assert_eq!(smooth_bump(0.0), 1.0);
        assert!(smooth_bump(0.999) < 1e-100);
    }

    #[test]
    fn bump_curve_support_and_bend_angle() {
        let c = bump_curve(10.0, 5.0, 2.0, 1.3, 401);
        assert_eq!(c.kappa()[0], 0.0);
        assert_eq!(c.kappa()[400], 0.0);
        assert!((c.sup_kappa() - 1.3).abs() < 1e-12);
        // bend angle = A * w * int bump, with int_{-1}^{1} bump = 1.2069003...
        let theta = c.bend_angle();
        assert!(
            (theta - 1.3 * 2.0 * 1.2069003224378743).abs() < 1e-4,
            "theta = {theta}"
        );
    }

    #[test]
    fn twisted_straight_is_untwisted_nowhere_but_bump() {
        let c = twisted_straight(10.0, 5.0, 2.0, 0.9, 201);
        assert_eq!(c.sup_kappa(), 0.0);
        assert_eq!(c.twist_at(0), 0.0);
        let mid = 100;
        assert!((c.twist_at(mid) + 0.9).abs() < 1e-12); // tau - alpha' = -0.9
        assert!(!c.alpha_dot_derived());
    }
}
