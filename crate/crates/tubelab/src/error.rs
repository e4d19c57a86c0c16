//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data failed validation (non-finite samples, bad grids, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The tube map is not a diffeomorphism: `beta_eps` reaches the margin.
    #[error("tube degenerates: min beta = {min_beta:.3e} at s = {s:.6}, y = ({y1:.4}, {y2:.4})")]
    TubeDegenerate {
        min_beta: f64,
        s: f64,
        y1: f64,
        y2: f64,
    },

    /// A cross-section eigenvalue flagged as degenerate was requested for
    /// downstream use; the simple-spectrum assumption is violated.
    #[error("degenerate cross-section spectrum: lambda_{index} and lambda_{} agree to within {gap:.3e} relative", index + 1)]
    DegenerateSpectrum { index: usize, gap: f64 },

    /// The weight `1 - xi . y` is not positive on the section.
    #[error("weight 1 - xi.y is non-positive on the section (|xi| sup|y| = {0:.6} >= 1)")]
    WeightNonPositive(f64),

    /// Generalized eigenproblem for a higher sector was requested without
    /// the sector projection that makes its spectrum bounded below.
    #[error(
        "sector index n = {0} requires deflation against the lower sectors; pass a SectorProjector"
    )]
    MustProject(usize),

    /// An eigensolve did not reach the requested tolerance.
    #[error("eigensolve failed to converge: {0}")]
    NonConvergent(String),

    /// Requested mode is not resolvable on the current grid.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Bound-state test gave different answers on the two truncation radii.
    #[error("bound-state check inconclusive: domains (-R, R) and (-2R, 2R) disagree (R = {0})")]
    Inconclusive(f64),

    /// Vertex coefficients requested for a non-resonant potential.
    #[error("vertex coefficients require a zero-energy resonance; the input is not resonant")]
    NotResonant,

    /// The identically-zero potential: the free line has no distinguished
    /// vertex and the coefficient formulas degenerate to 0/0.
    #[error("degenerate free line: V = 0 admits no vertex condition")]
    DegenerateFreeLine,

    /// Unbounded-below quadratic functional in the Gamma laboratory.
    #[error("functional unbounded below: projected source has a component in the kernel of T")]
    UnboundedBelow,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Io(_)
            | Error::Config(_)
            | Error::WeightNonPositive(_)
            | Error::MustProject(_) => 1,
            _ => 2,
        }
    }
}
