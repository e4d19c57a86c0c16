//! Numerical laboratory for the spectral limits of thin Dirichlet tubes.
//!
//! A tube in three-dimensional space is described by a reference curve
//! (curvature `kappa`, torsion `tau`), a bounded cross section `S` and a
//! rotation angle `alpha(s)` of the section around the curve.  The crate
//! provides the pieces needed to study two singular limits of the Dirichlet
//! Laplacian on such a tube at desk scale:
//!
//! * the squeezing limit `eps -> 0` of the cross-section diameter, which
//!   produces an effective one-dimensional Schroedinger operator with
//!   potential `(tau - alpha')^2 C_n - kappa^2 / 4` on the curve
//!   ([`geometry`], [`cross_section`], [`effective_operator`], [`tube3d`]);
//! * the broken-line limit `delta -> 0` of that effective operator, which
//!   selects a point interaction (vertex condition) at the bend, either a
//!   Dirichlet decoupling or a scaled coupling `(c1, c2)` depending on a
//!   zero-energy resonance ([`broken_line`]);
//!
//! plus a finite-dimensional testbed for the variational (Gamma) convergence
//! machinery the limits rest on ([`gamma_forms`]).
//!
//! Every capability has a runnable demo under `examples/`, and the `tubelab`
//! binary drives complete studies from a config file or a named preset.
//!
//! ```
//! use tubelab::cross_section::{build_mesh, dirichlet_eigenpairs, SectionShape};
//! use tubelab::geometry::presets;
//! use tubelab::tube3d::confinement_study;
//! use std::f64::consts::PI;
//!
//! // a gently bent tube over a small rectangle section
//! let mesh = build_mesh(
//!     &SectionShape::Rectangle { a: PI, b: PI / 2f64.sqrt() },
//!     PI / 8.0,
//! )?;
//! let modes = dirichlet_eigenpairs(&mesh, 1)?;
//! let curve = presets::bump_curve(6.0, 3.0, 1.2, 1.0, 25);
//! let study = confinement_study(&curve, &mesh, &modes, 0, &[0.2, 0.1], 1)?;
//! // squeezing halves the thickness: the gap to the effective operator shrinks
//! assert!(study.rows[1].diff < study.rows[0].diff);
//! # Ok::<(), tubelab::Error>(())
//! ```

pub mod broken_line;
pub mod cli;
pub mod cross_section;
pub mod effective_operator;
pub mod error;
pub mod gamma_forms;
pub mod geometry;
pub mod linalg;
pub mod rng;
pub mod tube3d;

pub use error::{Error, Result};
