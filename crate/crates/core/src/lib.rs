//! Tangential Crouzeix-Raviart finite elements for vector-valued Laplace
//! problems on implicitly defined closed surfaces.
//!
//! The toolkit solves `-Δ_Γ u + c u = f` for tangential vector fields `u` on a
//! level-set surface `Γ`, where `Δ_Γ` is the Bochner Laplacian. The surface is
//! approximated by a triangulation with all vertices on `Γ`; on each flat
//! triangle the solution is expanded in Crouzeix-Raviart basis functions times
//! the edge conormal/tangent pair, coupled across edges through signed
//! midpoint continuity. Manufactured right-hand sides are produced exactly by
//! second-order forward-mode automatic differentiation through the level-set
//! geometry, so convergence studies need no symbolic precomputation.
//!
//! Module map:
//! - [`level_surface`]: signed distance, normals, closest-point map and its
//!   Jacobian for sphere/torus level sets (plus a generic Newton fallback).
//! - [`jet`]: scalar second-order jets (value, gradient, Hessian).
//! - [`tangential`]: tangential differential operators and manufactured
//!   right-hand sides built from jets.
//! - [`mesh`]: surface triangulations, element frames, refinement, geometric
//!   approximation measurements, OFF import/export.
//! - [`cr_space`]: the vector-valued Crouzeix-Raviart space, edge degrees of
//!   freedom, and interpolation operators.
//! - [`quadrature`]: triangle and edge quadrature rules.
//! - [`assembly`]: local matrices, global sparse assembly, and a Jacobi
//!   preconditioned conjugate gradient solver.
//! - [`analysis`]: error norms, convergence studies, report output, and the
//!   verification suites behind the CLI `--verify` command.

pub mod analysis;
pub mod assembly;
pub mod cr_space;
pub mod error;
pub mod jet;
pub mod level_surface;
pub mod mesh;
pub mod quadrature;
pub mod tangential;

pub use error::{Error, Result};
pub use level_surface::{LevelSurface, SurfacePoint};
pub use tangential::TangentialFieldSpec;
