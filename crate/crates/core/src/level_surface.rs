//! Implicit surface geometry: signed distance, normals, tangential
//! projectors, the closest-point map and its Jacobian, and normal extensions
//! of fields defined on the surface.
//!
//! Sphere and torus carry closed-form closest-point maps; a generic level set
//! falls back to a Newton projection along its gradient and is meant for
//! experimentation only.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::jet::Jet2;

type ScalarField = Arc<dyn Fn(&Vector3<f64>) -> f64 + Send + Sync>;
type VectorField = Arc<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync>;

/// The supported level-set families.
#[derive(Clone)]
pub enum SurfaceKind {
    /// `phi(x) = |x|^2 - R^2`, centered at the origin.
    Sphere { radius: f64 },
    /// `phi(x) = x3^2 + (sqrt(x1^2 + x2^2) - R)^2 - r^2` with centerline
    /// radius `R` in the `x1x2`-plane and tube radius `r`.
    Torus { major_radius: f64, minor_radius: f64 },
    /// A user-supplied level set with its gradient.
    Generic { phi: ScalarField, grad: VectorField },
}

impl std::fmt::Debug for SurfaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SurfaceKind::Sphere { radius } => write!(f, "Sphere {{ radius: {radius} }}"),
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => write!(f, "Torus {{ major: {major_radius}, minor: {minor_radius} }}"),
            SurfaceKind::Generic { .. } => write!(f, "Generic {{ .. }}"),
        }
    }
}

/// An implicit closed surface together with the half-width `delta` of the
/// tubular neighborhood on which the closest-point map is used.
#[derive(Clone, Debug)]
pub struct LevelSurface {
    kind: SurfaceKind,
    delta: f64,
}

/// A point on the surface with its unit normal and tangential projector.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    /// `P = I - n nᵀ`.
    pub projector: Matrix3<f64>,
}

impl SurfacePoint {
    fn new(position: Vector3<f64>, normal: Vector3<f64>) -> Self {
        SurfacePoint {
            position,
            normal,
            projector: Matrix3::identity() - normal * normal.transpose(),
        }
    }
}

/// Tangential projector at a raw normal direction.
pub fn projector(normal: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - normal * normal.transpose()
}

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 50;

impl LevelSurface {
    pub fn sphere(radius: f64) -> Self {
        LevelSurface {
            kind: SurfaceKind::Sphere { radius },
            delta: 0.5 * radius,
        }
    }

    /// The unit sphere used in the convergence studies.
    pub fn unit_sphere() -> Self {
        Self::sphere(1.0)
    }

    pub fn torus(major_radius: f64, minor_radius: f64) -> Self {
        LevelSurface {
            kind: SurfaceKind::Torus {
                major_radius,
                minor_radius,
            },
            delta: 0.4 * minor_radius,
        }
    }

    /// The torus with centerline radius 1 and tube radius 1/2.
    pub fn standard_torus() -> Self {
        Self::torus(1.0, 0.5)
    }

    /// A generic level set. Both the function and its gradient must be
    /// supplied; `delta` must stay inside the reach of the surface.
    pub fn generic(
        phi: impl Fn(&Vector3<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
        delta: f64,
    ) -> Self {
        LevelSurface {
            kind: SurfaceKind::Generic {
                phi: Arc::new(phi),
                grad: Arc::new(grad),
            },
            delta,
        }
    }

    pub fn kind(&self) -> &SurfaceKind {
        &self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Exact surface area, where known analytically.
    pub fn area(&self) -> Option<f64> {
        match self.kind {
            SurfaceKind::Sphere { radius } => Some(4.0 * std::f64::consts::PI * radius * radius),
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => Some(4.0 * std::f64::consts::PI.powi(2) * major_radius * minor_radius),
            SurfaceKind::Generic { .. } => None,
        }
    }

    /// The level-set function itself.
    pub fn phi(&self, x: &Vector3<f64>) -> f64 {
        match &self.kind {
            SurfaceKind::Sphere { radius } => x.norm_squared() - radius * radius,
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                let rho = x.xy().norm();
                x.z * x.z + (rho - major_radius).powi(2) - minor_radius * minor_radius
            }
            SurfaceKind::Generic { phi, .. } => phi(x),
        }
    }

    /// Signed distance to the surface, negative inside.
    pub fn signed_distance(&self, x: &Vector3<f64>) -> Result<f64> {
        let d = match &self.kind {
            SurfaceKind::Sphere { radius } => x.norm() - radius,
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                let rho = x.xy().norm();
                ((rho - major_radius).powi(2) + x.z * x.z).sqrt() - minor_radius
            }
            SurfaceKind::Generic { .. } => {
                let p = self.newton_project(x)?;
                (x - p).norm() * self.phi(x).signum()
            }
        };
        self.check_tube(d)?;
        Ok(d)
    }

    fn check_tube(&self, d: f64) -> Result<()> {
        if d.abs() > self.delta {
            Err(Error::OutOfTube {
                dist: d.abs(),
                delta: self.delta,
            })
        } else {
            Ok(())
        }
    }

    /// Unit normal `n(p(x))`, extended constantly along normal rays.
    pub fn unit_normal(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.signed_distance(x)?;
        match &self.kind {
            SurfaceKind::Sphere { .. } => Ok(x / x.norm()),
            SurfaceKind::Torus { major_radius, .. } => {
                let q = Self::torus_offset(x, *major_radius)?;
                Ok(q / q.norm())
            }
            SurfaceKind::Generic { grad, .. } => {
                let p = self.newton_project(x)?;
                let g = grad(&p);
                let norm = g.norm();
                if norm < 1e-12 {
                    return Err(Error::DegenerateGradient(norm));
                }
                Ok(g / norm)
            }
        }
    }

    /// Offset from the torus centerline circle, `q = x - c(x)`.
    fn torus_offset(x: &Vector3<f64>, major_radius: f64) -> Result<Vector3<f64>> {
        let rho = x.xy().norm();
        if rho < 1e-12 {
            // On the symmetry axis the centerline projection is ambiguous;
            // such points are far outside any admissible tube.
            return Err(Error::OutOfTube {
                dist: (major_radius * major_radius + x.z * x.z).sqrt(),
                delta: 0.0,
            });
        }
        let scale = major_radius / rho;
        Ok(Vector3::new(
            x.x * (1.0 - scale),
            x.y * (1.0 - scale),
            x.z,
        ))
    }

    /// Closest point on the surface with its normal and projector.
    pub fn closest_point(&self, x: &Vector3<f64>) -> Result<SurfacePoint> {
        let d = self.signed_distance(x)?;
        match &self.kind {
            SurfaceKind::Sphere { radius } => {
                let n = x / x.norm();
                Ok(SurfacePoint::new(*radius * n, n))
            }
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                let q = Self::torus_offset(x, *major_radius)?;
                let s = q.norm();
                let n = q / s;
                let c = x - q;
                Ok(SurfacePoint::new(c + *minor_radius * n, n))
            }
            SurfaceKind::Generic { grad, .. } => {
                let p = self.newton_project(x)?;
                let g = grad(&p);
                let norm = g.norm();
                if norm < 1e-12 {
                    return Err(Error::DegenerateGradient(norm));
                }
                let _ = d;
                Ok(SurfacePoint::new(p, g / norm))
            }
        }
    }

    /// Jacobian `J_p = ∂p/∂x` of the closest-point map.
    ///
    /// Closed form for sphere and torus; central differences of the Newton
    /// projection for generic level sets.
    pub fn closest_point_jacobian(&self, x: &Vector3<f64>) -> Result<Matrix3<f64>> {
        self.signed_distance(x)?;
        match &self.kind {
            SurfaceKind::Sphere { radius } => {
                let r = x.norm();
                let xhat = x / r;
                Ok((radius / r) * (Matrix3::identity() - xhat * xhat.transpose()))
            }
            SurfaceKind::Torus {
                major_radius,
                minor_radius,
            } => {
                let rho = x.xy().norm();
                let chat = Vector3::new(x.x / rho, x.y / rho, 0.0);
                let horizontal = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
                let jac_c = (major_radius / rho) * (horizontal - chat * chat.transpose());
                let q = Self::torus_offset(x, *major_radius)?;
                let s = q.norm();
                let qhat = q / s;
                let jac_q = Matrix3::identity() - jac_c;
                Ok(jac_c
                    + (minor_radius / s)
                        * (Matrix3::identity() - qhat * qhat.transpose())
                        * jac_q)
            }
            SurfaceKind::Generic { .. } => {
                let h = 1e-6;
                let mut jac = Matrix3::zeros();
                for j in 0..3 {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[j] += h;
                    xm[j] -= h;
                    let col = (self.newton_project(&xp)? - self.newton_project(&xm)?) / (2.0 * h);
                    jac.set_column(j, &col);
                }
                Ok(jac)
            }
        }
    }

    /// Normal extension of a scalar field on the surface: `f(p(x))`.
    pub fn extend_scalar<F>(&self, field: F, x: &Vector3<f64>) -> Result<f64>
    where
        F: Fn(&Vector3<f64>) -> f64,
    {
        Ok(field(&self.closest_point(x)?.position))
    }

    /// Componentwise normal extension of a vector field: `u(p(x))`.
    pub fn extend_vector<F>(&self, field: F, x: &Vector3<f64>) -> Result<Vector3<f64>>
    where
        F: Fn(&Vector3<f64>) -> Vector3<f64>,
    {
        Ok(field(&self.closest_point(x)?.position))
    }

    /// Second-order jets of the smooth unit normal field `∇phi/|∇phi|`.
    ///
    /// Only the analytic sphere and torus support this; it is the geometric
    /// input to the tangential operators in [`crate::tangential`].
    pub fn normal_jets(&self, x: &Vector3<f64>) -> Result<[Jet2; 3]> {
        let c = Jet2::coordinates(x);
        match &self.kind {
            SurfaceKind::Sphere { .. } => {
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                Ok([c[0] / r, c[1] / r, c[2] / r])
            }
            SurfaceKind::Torus { major_radius, .. } => {
                let rho = (c[0] * c[0] + c[1] * c[1]).sqrt();
                let scale = Jet2::constant(*major_radius) / rho;
                let q = [
                    c[0] - c[0] * scale,
                    c[1] - c[1] * scale,
                    c[2],
                ];
                let s = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                Ok([q[0] / s, q[1] / s, q[2] / s])
            }
            SurfaceKind::Generic { .. } => Err(Error::UnsupportedSurface),
        }
    }

    /// Newton projection along the level-set gradient (generic surfaces).
    fn newton_project(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let SurfaceKind::Generic { phi, grad } = &self.kind else {
            unreachable!("newton_project is only used for generic level sets");
        };
        let mut p = *x;
        for _ in 0..NEWTON_MAX_ITER {
            let value = phi(&p);
            if value.abs() <= NEWTON_TOL {
                return Ok(p);
            }
            let g = grad(&p);
            let norm2 = g.norm_squared();
            if norm2.sqrt() < 1e-12 {
                return Err(Error::DegenerateGradient(norm2.sqrt()));
            }
            p -= (value / norm2) * g;
        }
        Err(Error::NewtonDivergence(NEWTON_MAX_ITER))
    }
}
