//! Reference curve, Frenet frame and tube metric.
//!
//! A tube is built by sweeping a cross section along a curve given through
//! its curvature `kappa(s)`, torsion `tau(s)` and section rotation angle
//! `alpha(s)`, all sampled on a uniform arc-length grid.  The frame field
//! solves the Serret-Frenet system
//!
//! ```text
//! T' = kappa N,   N' = -kappa T + tau B,   B' = -tau N
//! ```
//!
//! and the squeezed tube map `f(s, y) = gamma(s) + eps (y1 N_a + y2 B_a)`
//! induces the metric handled by [`metric_at`]; its degeneracy margin is
//! what [`validate_tube`] checks.  Only the combination `tau - alpha'`
//! (the twist rate) ever enters the assembled operators.
//!
//! Where `kappa` and `tau` both vanish the frame is transported
//! unchanged, which joins curved pieces to straight ones seamlessly.  A
//! global frame of this kind does not exist when the curvature has an
//! isolated zero with nonvanishing torsion there; keep `tau = 0` wherever
//! `kappa = 0` (all presets do).  No parallel-transport fallback is
//! attempted.

pub mod presets;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Margin below which the tube map is treated as degenerate.
pub const BETA_MARGIN: f64 = 1e-6;

/// Sampled description of the reference curve.
///
/// Immutable after construction; all accessors are cheap.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    s: Vec<f64>,
    kappa: Vec<f64>,
    tau: Vec<f64>,
    alpha: Vec<f64>,
    alpha_dot: Vec<f64>,
    alpha_dot_derived: bool,
}

/// Interpolated curve data at one arc-length position.
#[derive(Debug, Clone, Copy)]
pub struct CurveSample {
    pub kappa: f64,
    pub tau: f64,
    pub alpha: f64,
    pub alpha_dot: f64,
}

impl CurveSpec {
    /// Build and validate a curve from samples.  When `alpha_dot` is not
    /// supplied it is derived by central differences (one-sided, second
    /// order, at the ends).
    pub fn new(
        s: Vec<f64>,
        kappa: Vec<f64>,
        tau: Vec<f64>,
        alpha: Vec<f64>,
        alpha_dot: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = s.len();
        if n < 2 {
            return Err(Error::InvalidInput(
                "curve needs at least two samples".into(),
            ));
        }
        if kappa.len() != n || tau.len() != n || alpha.len() != n {
            return Err(Error::InvalidInput(
                "curve sample arrays disagree in length".into(),
            ));
        }
        for arr in [&s, &kappa, &tau, &alpha] {
            if arr.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite curve sample".into()));
            }
        }
        let h = s[1] - s[0];
        if h <= 0.0 {
            return Err(Error::InvalidInput("arc-length grid must increase".into()));
        }
        for i in 1..n {
            let hi = s[i] - s[i - 1];
            if hi <= 0.0 {
                return Err(Error::InvalidInput("arc-length grid must increase".into()));
            }
            if (hi - h).abs() > 1e-12 * h.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "arc-length grid is not uniform: spacing {hi} vs {h} at node {i}"
                )));
            }
        }
        let (alpha_dot, derived) = match alpha_dot {
            Some(ad) => {
                if ad.len() != n {
                    return Err(Error::InvalidInput("alpha_dot length mismatch".into()));
                }
                if ad.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput("non-finite alpha_dot sample".into()));
                }
                (ad, false)
            }
            None => (derive_alpha_dot(&alpha, h), true),
        };
        Ok(Self {
            s,
            kappa,
            tau,
            alpha,
            alpha_dot,
            alpha_dot_derived: derived,
        })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_dot(&self) -> &[f64] {
        &self.alpha_dot
    }

    pub fn alpha_dot_derived(&self) -> bool {
        self.alpha_dot_derived
    }

    /// Twist rate `tau - alpha'` at node `i`; the only combination of the
    /// two fields the assembled forms may read.
    pub fn twist_at(&self, i: usize) -> f64 {
        self.tau[i] - self.alpha_dot[i]
    }

    pub fn sup_kappa(&self) -> f64 {
        self.kappa.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Bend angle: trapezoid quadrature of the curvature.
    pub fn bend_angle(&self) -> f64 {
        let h = self.spacing();
        let n = self.len();
        let mut acc = 0.5 * (self.kappa[0] + self.kappa[n - 1]);
        for i in 1..n - 1 {
            acc += self.kappa[i];
        }
        acc * h
    }

    /// Linear interpolation of all fields at `s` (must lie inside the grid).
    pub fn sample(&self, s: f64) -> Result<CurveSample> {
        let n = self.len();
        let (s0, s1) = (self.s[0], self.s[n - 1]);
        let tol = 1e-9 * self.spacing();
        if s < s0 - tol || s > s1 + tol {
            return Err(Error::InvalidInput(format!(
                "s = {s} outside the curve range [{s0}, {s1}]"
            )));
        }
        let h = self.spacing();
        let pos = ((s - s0) / h).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let w = pos - i as f64;
        let lerp = |arr: &[f64]| arr[i] * (1.0 - w) + arr[i + 1] * w;
        Ok(CurveSample {
            kappa: lerp(&self.kappa),
            tau: lerp(&self.tau),
            alpha: lerp(&self.alpha),
            alpha_dot: lerp(&self.alpha_dot),
        })
    }

    /// Parse the plain-text table `s kappa tau alpha [alpha_dot]` with `#`
    /// comments and whitespace-separated columns.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut cols: Option<usize> = None;
        let mut data: Vec<Vec<f64>> = vec![Vec::new(); 5];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if cols.is_none() && fields[0].parse::<f64>().is_err() {
                // header line
                let expect_min: &[&str] = &["s", "kappa", "tau", "alpha"];
                if fields.len() < 4
                    || fields[..4]
                        .iter()
                        .zip(expect_min)
                        .any(|(a, b)| !a.eq_ignore_ascii_case(b))
                {
                    return Err(Error::InvalidInput(format!(
                        "bad curve header on line {}: expected `s kappa tau alpha [alpha_dot]`",
                        lineno + 1
                    )));
                }
                cols = Some(fields.len());
                continue;
            }
            let ncol = *cols.get_or_insert(fields.len());
            if fields.len() != ncol || !(4..=5).contains(&ncol) {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected {ncol} columns, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            for (k, f) in fields.iter().enumerate() {
                let v: f64 = f.parse().map_err(|_| {
                    Error::InvalidInput(format!("line {}: bad number {f:?}", lineno + 1))
                })?;
                data[k].push(v);
            }
        }
        let ncol = cols.ok_or_else(|| Error::InvalidInput("empty curve table".into()))?;
        let ad = if ncol == 5 {
            Some(std::mem::take(&mut data[4]))
        } else {
            None
        };
        CurveSpec::new(
            std::mem::take(&mut data[0]),
            std::mem::take(&mut data[1]),
            std::mem::take(&mut data[2]),
            std::mem::take(&mut data[3]),
            ad,
        )
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_table(&text)
    }

    /// Serialize to the same table format (always writes alpha_dot).
    pub fn to_table(&self) -> String {
        let mut out = String::from("s kappa tau alpha alpha_dot\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e}\n",
                self.s[i], self.kappa[i], self.tau[i], self.alpha[i], self.alpha_dot[i]
            ));
        }
        out
    }
}

fn derive_alpha_dot(alpha: &[f64], h: f64) -> Vec<f64> {
    let n = alpha.len();
    let mut ad = vec![0.0; n];
    for i in 1..n - 1 {
        ad[i] = (alpha[i + 1] - alpha[i - 1]) / (2.0 * h);
    }
    if n >= 3 {
        ad[0] = (-3.0 * alpha[0] + 4.0 * alpha[1] - alpha[2]) / (2.0 * h);
        ad[n - 1] = (3.0 * alpha[n - 1] - 4.0 * alpha[n - 2] + alpha[n - 3]) / (2.0 * h);
    } else {
        ad[0] = (alpha[1] - alpha[0]) / h;
        ad[n - 1] = ad[0];
    }
    ad
}

/// Orthonormal frame triads along the curve, plus the rotated section axes.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub t: Vec<Vector3<f64>>,
    pub n: Vec<Vector3<f64>>,
    pub b: Vec<Vector3<f64>>,
    pub n_alpha: Vec<Vector3<f64>>,
    pub b_alpha: Vec<Vector3<f64>>,
}

impl FrameField {
    /// Worst deviation from orthonormality over all nodes.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.t.len() {
            let (t, n, b) = (self.t[i], self.n[i], self.b[i]);
            worst = worst
                .max((t.norm() - 1.0).abs())
                .max((n.norm() - 1.0).abs())
                .max((b.norm() - 1.0).abs())
                .max(t.dot(&n).abs())
                .max(t.dot(&b).abs())
                .max(n.dot(&b).abs());
        }
        worst
    }

    /// Worst deviation of `B` from `T x N`.
    pub fn binormal_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.t.len() {
            worst = worst.max((self.t[i].cross(&self.n[i]) - self.b[i]).norm());
        }
        worst
    }
}

/// Integrate the Serret-Frenet system along the curve.
///
/// Classical fourth-order one-step scheme, initial triad equal to the
/// canonical basis, Gram-Schmidt re-orthonormalization after every step
/// so the triads cannot drift off the rotation group.  Where `kappa` and
/// `tau` both vanish the right-hand side is zero and the frame is simply
/// transported unchanged.
pub fn build_frame(curve: &CurveSpec) -> Result<FrameField> {
    let n = curve.len();
    let h = curve.spacing();
    let mut t = Vec::with_capacity(n);
    let mut nn = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut cur = (Vector3::x(), Vector3::y(), Vector3::z());
    t.push(cur.0);
    nn.push(cur.1);
    b.push(cur.2);

    // curvature/torsion at fractional positions by linear interpolation
    let field = |i: usize, frac: f64| -> (f64, f64) {
        if frac <= 0.0 {
            (curve.kappa[i], curve.tau[i])
        } else if frac >= 1.0 {
            (curve.kappa[i + 1], curve.tau[i + 1])
        } else {
            (
                curve.kappa[i] * (1.0 - frac) + curve.kappa[i + 1] * frac,
                curve.tau[i] * (1.0 - frac) + curve.tau[i + 1] * frac,
            )
        }
    };

    type Triad = (Vector3<f64>, Vector3<f64>, Vector3<f64>);
    let rhs = |kt: (f64, f64), st: &Triad| -> Triad {
        let (k, ta) = kt;
        (k * st.1, -k * st.0 + ta * st.2, -ta * st.1)
    };

    for i in 0..n - 1 {
        let k1 = rhs(field(i, 0.0), &cur);
        let s2 = (
            cur.0 + 0.5 * h * k1.0,
            cur.1 + 0.5 * h * k1.1,
            cur.2 + 0.5 * h * k1.2,
        );
        let k2 = rhs(field(i, 0.5), &s2);
        let s3 = (
            cur.0 + 0.5 * h * k2.0,
            cur.1 + 0.5 * h * k2.1,
            cur.2 + 0.5 * h * k2.2,
        );
        let k3 = rhs(field(i, 0.5), &s3);
        let s4 = (cur.0 + h * k3.0, cur.1 + h * k3.1, cur.2 + h * k3.2);
        let k4 = rhs(field(i, 1.0), &s4);
        cur = (
            cur.0 + (h / 6.0) * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            cur.1 + (h / 6.0) * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            cur.2 + (h / 6.0) * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
        );
        // Gram-Schmidt, tangent first
        let tt = cur.0.normalize();
        let nv = (cur.1 - tt.dot(&cur.1) * tt).normalize();
        let bb = tt.cross(&nv);
        cur = (tt, nv, bb);
        t.push(cur.0);
        nn.push(cur.1);
        b.push(cur.2);
    }

    let mut n_alpha = Vec::with_capacity(n);
    let mut b_alpha = Vec::with_capacity(n);
    for i in 0..n {
        let (sn, c) = curve.alpha[i].sin_cos();
        n_alpha.push(c * nn[i] - sn * b[i]);
        b_alpha.push(sn * nn[i] + c * b[i]);
    }
    Ok(FrameField {
        t,
        n: nn,
        b,
        n_alpha,
        b_alpha,
    })
}

/// Metric data of the squeezed tube at one point.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub beta: f64,
    pub rho: f64,
    pub sigma: f64,
    pub g: Matrix3<f64>,
    pub det_g: f64,
}

/// The weight `beta_eps(s, y) = 1 - eps kappa(s) (y1 cos a + y2 sin a)`.
pub fn beta_weight(curve: &CurveSpec, eps: f64, s: f64, y: [f64; 2]) -> Result<f64> {
    let cs = curve.sample(s)?;
    Ok(beta_from_sample(&cs, eps, y))
}

pub(crate) fn beta_from_sample(cs: &CurveSample, eps: f64, y: [f64; 2]) -> f64 {
    1.0 - eps * cs.kappa * (y[0] * cs.alpha.cos() + y[1] * cs.alpha.sin())
}

/// Full metric sample; `det_g` always equals `eps^4 beta^2`.
pub fn metric_at(curve: &CurveSpec, eps: f64, s: f64, y: [f64; 2]) -> Result<MetricSample> {
    let cs = curve.sample(s)?;
    let beta = beta_from_sample(&cs, eps, y);
    let tw = cs.tau - cs.alpha_dot;
    let rho = -eps * eps * y[1] * tw;
    let sigma = eps * eps * y[0] * tw;
    let e2 = eps * eps;
    let g = Matrix3::new(
        beta * beta + (rho * rho + sigma * sigma) / e2,
        rho,
        sigma,
        rho,
        e2,
        0.0,
        sigma,
        0.0,
        e2,
    );
    Ok(MetricSample {
        beta,
        rho,
        sigma,
        g,
        det_g: e2 * e2 * beta * beta,
    })
}

/// Rows of the tube-map Jacobian in the Frenet frame; `J J^T` reproduces
/// the metric, which the tests check against [`metric_at`].
pub fn jacobian_at(curve: &CurveSpec, eps: f64, s: f64, y: [f64; 2]) -> Result<Matrix3<f64>> {
    let cs = curve.sample(s)?;
    let beta = beta_from_sample(&cs, eps, y);
    let tw = cs.tau - cs.alpha_dot;
    let (sa, ca) = cs.alpha.sin_cos();
    Ok(Matrix3::new(
        beta,
        eps * tw * (y[0] * sa - y[1] * ca),
        eps * tw * (y[1] * sa + y[0] * ca),
        0.0,
        eps * ca,
        -eps * sa,
        0.0,
        eps * sa,
        eps * ca,
    ))
}

/// Outcome of the diffeomorphism check.
#[derive(Debug, Clone)]
pub struct TubeValidation {
    pub ok: bool,
    pub min_beta: f64,
    /// Arc length at which the minimum is attained.
    pub s_at: f64,
    /// Worst-case section point (radius `r` against the curvature).
    pub y_at: [f64; 2],
}

/// Check that `beta_eps` stays above the margin for every node, using the
/// worst case over a section of radius `section_radius`.
pub fn validate_tube(curve: &CurveSpec, eps: f64, section_radius: f64) -> TubeValidation {
    let mut min_beta = f64::INFINITY;
    let mut s_at = curve.s_grid()[0];
    let mut y_at = [0.0, 0.0];
    for i in 0..curve.len() {
        let k = curve.kappa()[i];
        let beta = 1.0 - eps * k.abs() * section_radius;
        if beta < min_beta {
            min_beta = beta;
            s_at = curve.s_grid()[i];
            let a = curve.alpha()[i];
            let dir = if k >= 0.0 { 1.0 } else { -1.0 };
            y_at = [
                dir * section_radius * a.cos(),
                dir * section_radius * a.sin(),
            ];
        }
    }
    TubeValidation {
        ok: min_beta >= BETA_MARGIN,
        min_beta,
        s_at,
        y_at,
    }
}
