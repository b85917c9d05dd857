//! Tangential differential operators and manufactured right-hand sides.
//!
//! An exact solution is specified as `u = P w` where `w` is a closed-form
//! ambient field and `P` the tangential projector of the level set. All
//! derivatives are taken through the smooth ambient extension `U(x) = P(x)
//! w(x)` with `P(x) = I - n(x) n(x)ᵀ` built from the level-set normal field.
//! Tangential operators evaluated at surface points do not depend on the
//! choice of smooth extension, so this reproduces the covariant quantities of
//! the normal extension `u ∘ p` exactly; the finite-difference suites in the
//! integration tests check precisely that equivalence.
//!
//! The Bochner Laplacian `Δ_Γ u = P div_Γ(∇_Γ u)` needs first derivatives of
//! the covariant derivative field `A = P (∇U) P`. Entries of `A` contain
//! first derivatives of `n` and `w`; their gradients are read off the
//! second-order jets of `n` and `w`, carried through the remaining matrix
//! algebra by a one-jet type.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::level_surface::LevelSurface;

type AmbientJetField = Arc<dyn Fn(&[Jet2; 3]) -> [Jet2; 3] + Send + Sync>;

/// An exact tangential solution `u = P w` on a level-set surface together
/// with the mass coefficient `c` of the problem `-Δ_Γ u + c u = f`.
#[derive(Clone)]
pub struct TangentialFieldSpec {
    surface: LevelSurface,
    ambient: AmbientJetField,
    mass_coeff: f64,
}

/// Value and gradient; enough to differentiate products of quantities whose
/// own derivatives were read off second-order jets.
#[derive(Clone, Copy)]
struct Dual3 {
    val: f64,
    grad: Vector3<f64>,
}

impl Dual3 {
    const ZERO: Dual3 = Dual3 {
        val: 0.0,
        grad: Vector3::new(0.0, 0.0, 0.0),
    };
}

impl std::ops::Add for Dual3 {
    type Output = Dual3;
    #[inline]
    fn add(self, rhs: Dual3) -> Dual3 {
        Dual3 {
            val: self.val + rhs.val,
            grad: self.grad + rhs.grad,
        }
    }
}

impl std::ops::Mul for Dual3 {
    type Output = Dual3;
    #[inline]
    fn mul(self, rhs: Dual3) -> Dual3 {
        Dual3 {
            val: self.val * rhs.val,
            grad: self.val * rhs.grad + rhs.val * self.grad,
        }
    }
}

fn dual_matmul(a: &[[Dual3; 3]; 3], b: &[[Dual3; 3]; 3]) -> [[Dual3; 3]; 3] {
    let mut out = [[Dual3::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = Dual3::ZERO;
            for k in 0..3 {
                acc = acc + a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

const ON_SURFACE_TOL: f64 = 1e-10;

impl TangentialFieldSpec {
    /// A spec from an arbitrary ambient field given as jet expressions.
    pub fn new(
        surface: LevelSurface,
        ambient: impl Fn(&[Jet2; 3]) -> [Jet2; 3] + Send + Sync + 'static,
        mass_coeff: f64,
    ) -> Self {
        TangentialFieldSpec {
            surface,
            ambient: Arc::new(ambient),
            mass_coeff,
        }
    }

    /// The study solution on the unit sphere:
    /// `u = P (sin(x2 x3), -sin(x1 x3), cos(x3^2))`.
    pub fn sphere_benchmark(mass_coeff: f64) -> Self {
        Self::new(
            LevelSurface::unit_sphere(),
            |x| {
                [
                    (x[1] * x[2]).sin(),
                    -(x[0] * x[2]).sin(),
                    (x[2] * x[2]).cos(),
                ]
            },
            mass_coeff,
        )
    }

    /// The study solution on the standard torus:
    /// `u = P (x2 + x3 x1, -x1 x3, x3^2)`.
    pub fn torus_benchmark(mass_coeff: f64) -> Self {
        Self::new(
            LevelSurface::standard_torus(),
            |x| [x[1] + x[2] * x[0], -(x[0] * x[2]), x[2] * x[2]],
            mass_coeff,
        )
    }

    pub fn surface(&self) -> &LevelSurface {
        &self.surface
    }

    pub fn mass_coeff(&self) -> f64 {
        self.mass_coeff
    }

    fn check_on_surface(&self, y: &Vector3<f64>) -> Result<()> {
        let phi = self.surface.phi(y);
        if phi.abs() < ON_SURFACE_TOL {
            Ok(())
        } else {
            Err(Error::NotOnSurface(phi))
        }
    }

    /// Jets of the ambient extension `U = P w` at a surface point, together
    /// with the jets of the normal field.
    fn extension_jets(&self, y: &Vector3<f64>) -> Result<([Jet2; 3], [Jet2; 3])> {
        let n = self.surface.normal_jets(y)?;
        let w = (self.ambient)(&Jet2::coordinates(y));
        let n_dot_w = n[0] * w[0] + n[1] * w[1] + n[2] * w[2];
        let u = [
            w[0] - n[0] * n_dot_w,
            w[1] - n[1] * n_dot_w,
            w[2] - n[2] * n_dot_w,
        ];
        for j in u.iter().chain(n.iter()) {
            if !j.is_finite() {
                return Err(Error::Domain("non-finite jet in ambient extension"));
            }
        }
        Ok((u, n))
    }

    /// Exact solution value `u(y) = P(y) w(y)`.
    pub fn solution(&self, y: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.check_on_surface(y)?;
        let (u, _) = self.extension_jets(y)?;
        Ok(Vector3::new(u[0].value, u[1].value, u[2].value))
    }

    /// Solution value and the ambient Jacobian `∇U(y)` of the smooth
    /// extension, used to transport gradients to the discrete surface via
    /// `∇(u∘p) = (∇U ∘ p) J_p`.
    pub fn solution_and_jacobian(&self, y: &Vector3<f64>) -> Result<(Vector3<f64>, Matrix3<f64>)> {
        self.check_on_surface(y)?;
        let (u, _) = self.extension_jets(y)?;
        let value = Vector3::new(u[0].value, u[1].value, u[2].value);
        let jac = Matrix3::from_fn(|k, j| u[k].grad[j]);
        Ok((value, jac))
    }

    /// Covariant derivative `∇_Γ u = P (∇U) P` at a surface point.
    pub fn tangential_gradient(&self, y: &Vector3<f64>) -> Result<Matrix3<f64>> {
        let (_, jac) = self.solution_and_jacobian(y)?;
        let p = self.surface.closest_point(y)?.projector;
        Ok(p * jac * p)
    }

    /// Bochner Laplacian `Δ_Γ u = P div_Γ(∇_Γ u)` with the divergence applied
    /// row-wise.
    pub fn bochner_laplacian(&self, y: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.check_on_surface(y)?;
        let (u, n) = self.extension_jets(y)?;

        // One-jets of the projector entries and of the extension Jacobian.
        let mut proj = [[Dual3::ZERO; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                proj[i][k] = Dual3 {
                    val: f64::from(u8::from(i == k)) - n[i].value * n[k].value,
                    grad: -(n[i].value * n[k].grad + n[k].value * n[i].grad),
                };
            }
        }
        let mut jac_u = [[Dual3::ZERO; 3]; 3];
        for k in 0..3 {
            for j in 0..3 {
                jac_u[k][j] = Dual3 {
                    val: u[k].grad[j],
                    grad: u[k].hess.column(j).into(),
                };
            }
        }

        // A = P (∇U) P, the covariant derivative as an ambient field.
        let a = dual_matmul(&proj, &dual_matmul(&jac_u, &proj));

        let nv = Vector3::new(n[0].value, n[1].value, n[2].value);
        let p = Matrix3::identity() - nv * nv.transpose();
        // Row-wise surface divergence: tr(P J_{row_i} P).
        let divergence = Vector3::from_fn(|i, _| {
            let jac_row = Matrix3::from_fn(|j, k| a[i][j].grad[k]);
            (p * jac_row * p).trace()
        });
        Ok(p * divergence)
    }

    /// Manufactured right-hand side `f = -Δ_Γ u + c u`.
    pub fn rhs(&self, y: &Vector3<f64>) -> Result<Vector3<f64>> {
        let lap = self.bochner_laplacian(y)?;
        let u = self.solution(y)?;
        Ok(-lap + self.mass_coeff * u)
    }
}

impl std::fmt::Debug for TangentialFieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TangentialFieldSpec")
            .field("surface", &self.surface)
            .field("mass_coeff", &self.mass_coeff)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sphere_point(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() > 0.3 {
                return v.normalize();
            }
        }
    }

    fn random_torus_point(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let psi = rng.random_range(0.0..std::f64::consts::TAU);
        let w = 1.0 + 0.5 * psi.cos();
        Vector3::new(w * theta.cos(), w * theta.sin(), 0.5 * psi.sin())
    }

    fn killing_field(mass_coeff: f64) -> TangentialFieldSpec {
        TangentialFieldSpec::new(
            LevelSurface::unit_sphere(),
            |x| [-x[1], x[0], Jet2::constant(0.0)],
            mass_coeff,
        )
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let spec = TangentialFieldSpec::new(
            LevelSurface::unit_sphere(),
            |_| [Jet2::constant(0.0); 3],
            1.0,
        );
        let y = Vector3::new(0.0, 1.0, 0.0);
        assert_eq!(spec.solution(&y).unwrap(), Vector3::zeros());
        assert_eq!(spec.tangential_gradient(&y).unwrap(), Matrix3::zeros());
        assert_eq!(spec.bochner_laplacian(&y).unwrap(), Vector3::zeros());
        assert_eq!(spec.rhs(&y).unwrap(), Vector3::zeros());
    }

    #[test]
    fn covariant_derivative_ranges_stay_tangential() {
        let spec = TangentialFieldSpec::new(
            LevelSurface::unit_sphere(),
            |_| [Jet2::constant(1.0), Jet2::constant(0.0), Jet2::constant(0.0)],
            1.0,
        );
        let y = Vector3::new(0.0, 0.0, 1.0);
        let grad = spec.tangential_gradient(&y).unwrap();
        let n = Vector3::new(0.0, 0.0, 1.0);
        assert!((grad * n).norm() < 1e-12);
        assert!((grad.transpose() * n).norm() < 1e-12);
        let p = crate::level_surface::projector(&n);
        assert!((p * grad * p - grad).norm() < 1e-12);
    }

    /// The rotation field `u = (-x2, x1, 0)` is tangential on the sphere and
    /// satisfies `Δ_Γ u = -u`; with `c = 1` the manufactured right-hand side
    /// is `2u`. (Derivable by hand from `A = P [e3]x P`.)
    #[test]
    fn sphere_rotation_field_is_an_eigenfield() {
        let spec = killing_field(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut pts = vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ];
        for _ in 0..30 {
            let y = random_sphere_point(&mut rng);
            if y.xy().norm() > 0.1 {
                pts.push(y);
            }
        }
        for y in pts {
            let u = spec.solution(&y).unwrap();
            let lap = spec.bochner_laplacian(&y).unwrap();
            assert!(
                (lap + u).norm() < 1e-9,
                "laplacian {lap:?} != -u at {y:?}"
            );
            let f = spec.rhs(&y).unwrap();
            assert!((f - 2.0 * u).norm() < 1e-9);
        }
    }

    #[test]
    fn benchmark_solutions_are_tangential() {
        let sphere = TangentialFieldSpec::sphere_benchmark(0.1);
        let torus = TangentialFieldSpec::torus_benchmark(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..200 {
            let y = random_sphere_point(&mut rng);
            let n = sphere.surface().unit_normal(&y).unwrap();
            assert!(sphere.solution(&y).unwrap().dot(&n).abs() < 1e-13);
            assert!(sphere.rhs(&y).unwrap().dot(&n).abs() < 1e-11);
            assert!(sphere.bochner_laplacian(&y).unwrap().dot(&n).abs() < 1e-11);

            let z = random_torus_point(&mut rng);
            let nt = torus.surface().unit_normal(&z).unwrap();
            assert!(torus.solution(&z).unwrap().dot(&nt).abs() < 1e-13);
            assert!(torus.rhs(&z).unwrap().dot(&nt).abs() < 1e-11);
        }
    }

    #[test]
    fn covariant_derivative_is_doubly_projected() {
        let specs = [
            TangentialFieldSpec::sphere_benchmark(0.1),
            TangentialFieldSpec::torus_benchmark(0.1),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for spec in &specs {
            for _ in 0..50 {
                let y = match spec.surface().kind() {
                    crate::level_surface::SurfaceKind::Sphere { .. } => {
                        random_sphere_point(&mut rng)
                    }
                    _ => random_torus_point(&mut rng),
                };
                let grad = spec.tangential_gradient(&y).unwrap();
                let p = spec.surface().closest_point(&y).unwrap().projector;
                assert!((p * grad * p - grad).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn off_surface_points_are_rejected() {
        let spec = TangentialFieldSpec::sphere_benchmark(0.1);
        let y = Vector3::new(1.01, 0.0, 0.0);
        assert!(matches!(spec.solution(&y), Err(Error::NotOnSurface(_))));
        assert!(matches!(
            spec.bochner_laplacian(&y),
            Err(Error::NotOnSurface(_))
        ));
    }

    /// Covariant derivative against central differences of the normal
    /// extension u∘p (first-order check; the second-order operators get
    /// their finite-difference comparison in the integration suites).
    #[test]
    fn tangential_gradient_matches_finite_differences() {
        let sphere = TangentialFieldSpec::sphere_benchmark(0.1);
        let surface = sphere.surface().clone();
        let u_exact = |z: &Vector3<f64>| {
            let w = Vector3::new((z.y * z.z).sin(), -(z.x * z.z).sin(), (z.z * z.z).cos());
            let sp = surface.closest_point(z).unwrap();
            sp.projector * w
        };
        let pts = [
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.6, -0.48, 0.64).normalize(),
        ];
        let h = 1e-5;
        for y in pts {
            let grad = sphere.tangential_gradient(&y).unwrap();
            let mut jac_fd = Matrix3::zeros();
            for j in 0..3 {
                let mut yp = y;
                let mut ym = y;
                yp[j] += h;
                ym[j] -= h;
                let up = surface.closest_point(&yp).map(|s| u_exact(&s.position)).unwrap();
                // u∘p: evaluate the extension at shifted ambient points.
                let um = surface.closest_point(&ym).map(|s| u_exact(&s.position)).unwrap();
                jac_fd.set_column(j, &((up - um) / (2.0 * h)));
            }
            let p = surface.closest_point(&y).unwrap().projector;
            let cov_fd = p * jac_fd * p;
            assert!(
                (grad - cov_fd).norm() < 1e-6,
                "jet covariant derivative {grad:?} vs FD {cov_fd:?}"
            );
        }
    }
}
