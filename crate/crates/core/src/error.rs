//! Crate-wide error type.

/// Errors produced by geometry, discretization, and solver routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Point lies outside the tubular neighborhood of the surface.
    #[error("point outside tubular neighborhood: |d| = {dist:.6e} > delta = {delta:.6e}")]
    OutOfTube { dist: f64, delta: f64 },

    /// Level-set gradient too small to define a normal direction.
    #[error("degenerate level-set gradient (norm {0:.6e})")]
    DegenerateGradient(f64),

    /// Closest-point Newton iteration for a generic level set did not converge.
    #[error("closest-point iteration did not converge in {0} steps")]
    NewtonDivergence(usize),

    /// An operation requiring an on-surface point was called off the surface.
    #[error("point not on surface (phi = {0:.6e})")]
    NotOnSurface(f64),

    /// Expression evaluation left the domain of an elementary function.
    #[error("domain error in expression evaluation: {0}")]
    Domain(&'static str),

    /// Surface kind does not support the requested analytic operation.
    #[error("operation requires an analytic sphere or torus level set")]
    UnsupportedSurface,

    /// Triangle with (near-)zero area.
    #[error("degenerate triangle (area {0:.6e})")]
    DegenerateTriangle(f64),

    /// Torus grid resolution below the supported minimum.
    #[error("invalid torus resolution ({n_major}, {n_minor}); need n_major >= 8, n_minor >= 4")]
    InvalidResolution { n_major: usize, n_minor: usize },

    /// Mesh fails a structural requirement (closedness, connectivity).
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// Rate measurement needs a longer mesh sequence.
    #[error("need at least {needed} meshes of decreasing h, got {got}")]
    InsufficientMeshes { needed: usize, got: usize },

    /// Matrix failed the symmetry check ahead of the CG solve.
    #[error("matrix not symmetric (relative asymmetry {0:.6e})")]
    NotSymmetric(f64),

    /// Conjugate gradients hit the iteration cap.
    #[error("CG reached {iterations} iterations with relative residual {residual:.6e}")]
    MaxIterations { iterations: usize, residual: f64 },

    /// Element or coefficient index out of range.
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),

    /// Failure while running a convergence study, tagged with the level.
    #[error("study failed at level {level}: {source}")]
    AtLevel {
        level: u32,
        #[source]
        source: Box<Error>,
    },

    /// Malformed input file (OFF mesh, config).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the refinement level at which it occurred.
    pub fn at_level(self, level: u32) -> Error {
        Error::AtLevel {
            level,
            source: Box::new(self),
        }
    }
}
