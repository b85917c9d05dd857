//! Shared test support: finite-difference oracles for the tangential
//! operators, built solely on the closest-point map and plain `f64`
//! evaluation of the ambient fields. Independent of the jet pipeline.

use nalgebra::{Matrix3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use surface_cr::level_surface::{projector, LevelSurface};

/// The sphere study field as a plain closure.
pub fn sphere_benchmark_w(y: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new((y.y * y.z).sin(), -(y.x * y.z).sin(), (y.z * y.z).cos())
}

/// The torus study field as a plain closure.
pub fn torus_benchmark_w(y: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(y.y + y.z * y.x, -y.x * y.z, y.z * y.z)
}

/// Normal extension `ũ(x) = P(p(x)) w(p(x))` of the tangential field `P w`.
pub fn extended_solution(
    surface: &LevelSurface,
    w: &dyn Fn(&Vector3<f64>) -> Vector3<f64>,
    x: &Vector3<f64>,
) -> Vector3<f64> {
    let sp = surface.closest_point(x).unwrap();
    sp.projector * w(&sp.position)
}

fn extended_projector(surface: &LevelSurface, x: &Vector3<f64>) -> Matrix3<f64> {
    projector(&surface.closest_point(x).unwrap().normal)
}

/// Central-difference Jacobian of the normal extension.
pub fn fd_extension_jacobian(
    surface: &LevelSurface,
    w: &dyn Fn(&Vector3<f64>) -> Vector3<f64>,
    x: &Vector3<f64>,
    h: f64,
) -> Matrix3<f64> {
    let mut jac = Matrix3::zeros();
    for j in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let col = (extended_solution(surface, w, &xp) - extended_solution(surface, w, &xm))
            / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

/// Covariant derivative by finite differences: `P (∇ũ) P` at a surface point.
pub fn fd_covariant_gradient(
    surface: &LevelSurface,
    w: &dyn Fn(&Vector3<f64>) -> Vector3<f64>,
    y: &Vector3<f64>,
    h: f64,
) -> Matrix3<f64> {
    let p = extended_projector(surface, y);
    p * fd_extension_jacobian(surface, w, y, h) * p
}

/// Bochner Laplacian by second-order finite differences of the normal
/// extension: row-wise divergence of `A = P̃ (∇ũ) P̃` with all derivative
/// blocks from central stencils of step `h`.
pub fn fd_bochner_laplacian(
    surface: &LevelSurface,
    w: &dyn Fn(&Vector3<f64>) -> Vector3<f64>,
    y: &Vector3<f64>,
    h: f64,
) -> Vector3<f64> {
    let u = |x: &Vector3<f64>| extended_solution(surface, w, x);
    let proj = |x: &Vector3<f64>| extended_projector(surface, x);

    let p = proj(y);
    let jac = fd_extension_jacobian(surface, w, y, h);

    // second derivatives of each component: hess[m][(j, k)] = d_j d_k u_m
    let center = u(y);
    let mut hess = [Matrix3::zeros(); 3];
    for j in 0..3 {
        for k in j..3 {
            let value: Vector3<f64> = if j == k {
                let mut xp = *y;
                let mut xm = *y;
                xp[j] += h;
                xm[j] -= h;
                (u(&xp) - 2.0 * center + u(&xm)) / (h * h)
            } else {
                let mut xpp = *y;
                let mut xpm = *y;
                let mut xmp = *y;
                let mut xmm = *y;
                xpp[j] += h;
                xpp[k] += h;
                xpm[j] += h;
                xpm[k] -= h;
                xmp[j] -= h;
                xmp[k] += h;
                xmm[j] -= h;
                xmm[k] -= h;
                (u(&xpp) - u(&xpm) - u(&xmp) + u(&xmm)) / (4.0 * h * h)
            };
            for m in 0..3 {
                hess[m][(j, k)] = value[m];
                hess[m][(k, j)] = value[m];
            }
        }
    }

    // first derivatives of the extended projector
    let mut dproj = [Matrix3::zeros(); 3];
    for (k, slot) in dproj.iter_mut().enumerate() {
        let mut xp = *y;
        let mut xm = *y;
        xp[k] += h;
        xm[k] -= h;
        *slot = (proj(&xp) - proj(&xm)) / (2.0 * h);
    }

    // d_k A = dP J P + P dJ P + P J dP with (dJ_k)[m][j] = hess[m][(j, k)]
    let mut da = [Matrix3::zeros(); 3];
    for k in 0..3 {
        let djac = Matrix3::from_fn(|m, j| hess[m][(j, k)]);
        da[k] = dproj[k] * jac * p + p * djac * p + p * jac * dproj[k];
    }

    let divergence = Vector3::from_fn(|i, _| {
        let jac_row = Matrix3::from_fn(|j, k| da[k][(i, j)]);
        (p * jac_row * p).trace()
    });
    p * divergence
}

/// Manufactured right-hand side by finite differences.
pub fn fd_rhs(
    surface: &LevelSurface,
    w: &dyn Fn(&Vector3<f64>) -> Vector3<f64>,
    mass_coeff: f64,
    y: &Vector3<f64>,
    h: f64,
) -> Vector3<f64> {
    -fd_bochner_laplacian(surface, w, y, h) + mass_coeff * extended_solution(surface, w, y)
}

/// Deterministic sample of surface points.
pub fn random_sphere_points(n: usize, seed: u64) -> Vec<Vector3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0f64),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() > 0.3 {
            points.push(v.normalize());
        }
    }
    points
}

/// Deterministic sample of points on the standard torus.
pub fn random_torus_points(n: usize, seed: u64) -> Vec<Vector3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let psi = rng.random_range(0.0..std::f64::consts::TAU);
            let w = 1.0 + 0.5 * psi.cos();
            Vector3::new(w * theta.cos(), w * theta.sin(), 0.5 * psi.sin())
        })
        .collect()
}
