//! In-crate linear algebra kernels.
//!
//! The discretized forms are symmetric with small bandwidth (2D sections:
//! one grid row; 3D tubes: one cross-section slab), so a banded LDL^T
//! factorization plus shift-invert subspace iteration covers every
//! eigenproblem in the crate.  Dense paths via nalgebra serve small
//! problems and cross-checks.

pub mod banded;
pub mod dense;
pub mod subspace;
pub mod tridiag;

pub use banded::SymBanded;
pub use subspace::{banded_smallest, ShiftInvertOpts};
pub use tridiag::SymTridiag;
