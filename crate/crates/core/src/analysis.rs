//! Error norms, experimental orders of convergence, the study driver behind
//! the CLI, report output, and the property-verification suites.

use std::io::Write;
use std::ops::RangeInclusive;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, energy, solve_cg};
use crate::cr_space::{edge_jump_means, interpolate_tan, DiscreteField, Space};
use crate::error::{Error, Result};
use crate::level_surface::LevelSurface;
use crate::mesh::{build_sphere_mesh, build_torus_mesh, measure_geometry_rates, SurfaceMesh};
use crate::quadrature::{gauss_legendre_unit, TriangleRule};
use crate::tangential::TangentialFieldSpec;

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn least_squares_order(h: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(h.len(), errors.len());
    let logs: Vec<(f64, f64)> = h
        .iter()
        .zip(errors)
        .map(|(&hi, &ei)| (hi.ln(), ei.max(1e-300).ln()))
        .collect();
    let n = logs.len() as f64;
    let mean_h = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_e = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (lh, le) in logs {
        num += (lh - mean_h) * (le - mean_e);
        den += (lh - mean_h) * (lh - mean_h);
    }
    num / den
}

/// Observed order between two consecutive levels,
/// `log(e0/e1) / log(h0/h1)`.
pub fn pairwise_order(h0: f64, h1: f64, e0: f64, e1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// The error measures of one discrete solution against the extension of the
/// exact solution.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// `‖ũ - u_h‖_{L²(Γ_h)}` without any projection (first order only: the
    /// two fields live in different tangent planes).
    pub l2_plain: f64,
    /// `‖P (ũ - u_h)‖_{L²(Γ_h)}` with the exact projector at lifted points.
    pub l2_surface_projected: f64,
    /// `‖P_h (ũ - u_h)‖_{L²(Γ_h)}`, the quantity reported as the L² error.
    pub l2_element_projected: f64,
    /// Broken `H¹` seminorm `‖∇_Γh ũ - ∇_Γh u_h‖_{L²(Γ_h)}`.
    pub h1_seminorm: f64,
    /// Energy norm `(h1_seminorm² + l2_plain²)^{1/2}`, reported as the H¹
    /// error.
    pub energy: f64,
}

/// Elementwise quadrature of the error norms.
///
/// The extension is evaluated through the closest-point map; its surface
/// gradient is transported by the chain rule `∇(u∘p) = (∇U ∘ p) J_p` and
/// projected onto the element plane from both sides.
pub fn error_norms(
    space: &Space,
    spec: &TangentialFieldSpec,
    field: &DiscreteField,
    rule: &TriangleRule,
) -> Result<ErrorNorms> {
    let surface = spec.surface();
    let mut l2_plain = 0.0;
    let mut l2_p = 0.0;
    let mut l2_ph = 0.0;
    let mut h1 = 0.0;
    for t in 0..space.mesh.n_triangles() {
        let frame = &space.frames[t];
        let p_h = frame.projector();
        let grad_h = space.surface_gradient(field, t)?;
        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let x = space.mesh.barycentric_point(t, bary);
            let lifted = surface.closest_point(&x)?;
            let (u, jac_u) = spec.solution_and_jacobian(&lifted.position)?;
            let jac_p = surface.closest_point_jacobian(&x)?;
            let grad_ext = p_h * (jac_u * jac_p) * p_h;
            let v = space.evaluate(field, t, bary)?;
            let diff = u - v;
            let scale = w * frame.area;
            l2_plain += scale * diff.norm_squared();
            l2_p += scale * (lifted.projector * diff).norm_squared();
            l2_ph += scale * (p_h * diff).norm_squared();
            h1 += scale * (grad_ext - grad_h).norm_squared();
        }
    }
    Ok(ErrorNorms {
        l2_plain: l2_plain.sqrt(),
        l2_surface_projected: l2_p.sqrt(),
        l2_element_projected: l2_ph.sqrt(),
        h1_seminorm: h1.sqrt(),
        energy: (h1 + l2_plain).sqrt(),
    })
}

/// Which study surface to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceChoice {
    Sphere,
    Torus,
}

impl std::str::FromStr for SurfaceChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(SurfaceChoice::Sphere),
            "torus" => Ok(SurfaceChoice::Torus),
            other => Err(Error::Parse(format!("unknown surface {other:?}"))),
        }
    }
}

/// Parameters of a convergence study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyConfig {
    pub surface: SurfaceChoice,
    /// Refinement levels, inclusive. Sphere levels are icosahedron
    /// subdivisions; torus level `k` uses a `(16·2^k) × (8·2^k)` grid.
    pub level_min: u32,
    pub level_max: u32,
    pub mass_coeff: f64,
    /// Degree of the load quadrature (error norms use at least degree 4).
    pub quad_degree: usize,
    pub cg_tol: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            surface: SurfaceChoice::Sphere,
            level_min: 2,
            level_max: 4,
            mass_coeff: 0.1,
            quad_degree: 4,
            cg_tol: 1e-12,
        }
    }
}

impl StudyConfig {
    pub fn build_spec(&self) -> TangentialFieldSpec {
        match self.surface {
            SurfaceChoice::Sphere => TangentialFieldSpec::sphere_benchmark(self.mass_coeff),
            SurfaceChoice::Torus => TangentialFieldSpec::torus_benchmark(self.mass_coeff),
        }
    }

    pub fn build_mesh(&self, level: u32) -> Result<SurfaceMesh> {
        match self.surface {
            SurfaceChoice::Sphere => {
                build_sphere_mesh(&LevelSurface::unit_sphere(), level)
            }
            SurfaceChoice::Torus => build_torus_mesh(
                &LevelSurface::standard_torus(),
                16usize << level,
                8usize << level,
            ),
        }
    }
}

/// One refinement level of a study report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub h: f64,
    pub l2_error: f64,
    pub l2_order: Option<f64>,
    pub h1_error: f64,
    pub h1_order: Option<f64>,
    pub h1_seminorm: f64,
    pub n_dofs: usize,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    /// Relative gap in the identity `a_h(u_h, u_h) = (f̃, u_h)`.
    pub galerkin_gap: f64,
    pub matrix_asymmetry: f64,
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
    pub norms_seconds: f64,
}

/// Full study output: configuration echo plus one row per level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorReport {
    pub config: StudyConfig,
    pub rows: Vec<ReportRow>,
}

/// Run the convergence study described by `config`.
pub fn run_study(config: &StudyConfig) -> Result<ErrorReport> {
    let spec = config.build_spec();
    let error_rule = TriangleRule::with_degree(config.quad_degree.max(4));
    let load_rule = TriangleRule::with_degree(config.quad_degree);
    let mut rows: Vec<ReportRow> = Vec::new();
    for level in config.level_min..=config.level_max {
        let run = || -> Result<ReportRow> {
            let mesh = config.build_mesh(level)?;
            let h = mesh.h;
            let space = Space::build(mesh)?;

            let t0 = Instant::now();
            let system = assemble(&space, &spec, &load_rule)?;
            let assemble_seconds = t0.elapsed().as_secs_f64();

            let t1 = Instant::now();
            let (coeffs, stats) = solve_cg(&system, config.cg_tol)?;
            let solve_seconds = t1.elapsed().as_secs_f64();
            let field = DiscreteField { coeffs };

            let work: f64 = system.rhs.iter().zip(&field.coeffs).map(|(b, x)| b * x).sum();
            let galerkin_gap = (energy(&system, &field) - work).abs() / work.abs().max(1e-300);

            let t2 = Instant::now();
            let norms = error_norms(&space, &spec, &field, &error_rule)?;
            let norms_seconds = t2.elapsed().as_secs_f64();

            Ok(ReportRow {
                h,
                l2_error: norms.l2_element_projected,
                l2_order: None,
                h1_error: norms.energy,
                h1_order: None,
                h1_seminorm: norms.h1_seminorm,
                n_dofs: space.n_dofs(),
                cg_iterations: stats.iterations,
                cg_residual: stats.residual,
                galerkin_gap,
                matrix_asymmetry: system.matrix.symmetry_error(),
                assemble_seconds,
                solve_seconds,
                norms_seconds,
            })
        };
        let mut row = run().map_err(|e| e.at_level(level))?;
        if let Some(prev) = rows.last() {
            row.l2_order = Some(pairwise_order(prev.h, row.h, prev.l2_error, row.l2_error));
            row.h1_order = Some(pairwise_order(prev.h, row.h, prev.h1_error, row.h1_error));
        }
        rows.push(row);
    }
    Ok(ErrorReport {
        config: config.clone(),
        rows,
    })
}

/// CSV with `h,l2_error,l2_order,h1_error,h1_order`; six significant digits,
/// orders blank on the first row.
pub fn write_csv<W: Write>(report: &ErrorReport, mut out: W) -> Result<()> {
    writeln!(out, "h,l2_error,l2_order,h1_error,h1_order")?;
    for row in &report.rows {
        let order = |o: Option<f64>| o.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(
            out,
            "{:.5e},{:.5e},{},{:.5e},{}",
            row.h,
            row.l2_error,
            order(row.l2_order),
            row.h1_error,
            order(row.h1_order),
        )?;
    }
    Ok(())
}

/// JSON report: the CSV fields plus config echo, diagnostics, and timings.
pub fn write_json<W: Write>(report: &ErrorReport, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, report)
        .map_err(|e| Error::Parse(format!("JSON serialization failed: {e}")))
}

/// Interpolation errors of the tangential interpolant over a mesh sequence.
#[derive(Clone, Debug)]
pub struct InterpolationRates {
    pub h: Vec<f64>,
    /// `‖∇_Γh(ũ - Π u)‖_{L²(Γ_h)}` per level.
    pub covariant_gradient: Vec<f64>,
    /// `‖P (ũ - Π u)‖_{L²(Γ_h)}`.
    pub l2_surface_projected: Vec<f64>,
    /// `‖P_h (ũ - Π u)‖_{L²(Γ_h)}`.
    pub l2_element_projected: Vec<f64>,
    /// Edge norm `(Σ_E ‖P (ũ - Π u)‖²_{L²(E)})^{1/2}`, both traces.
    pub edge_surface_projected: Vec<f64>,
    /// Same with `P_h`.
    pub edge_element_projected: Vec<f64>,
    /// Energy-norm error.
    pub energy: Vec<f64>,
    /// Least-squares orders in field order above.
    pub orders: [f64; 6],
}

/// Interpolate the exact solution on each level and record the error norms
/// of the interpolant, including the per-edge trace norms.
pub fn interpolation_rates(
    config: &StudyConfig,
    levels: RangeInclusive<u32>,
) -> Result<InterpolationRates> {
    let spec = config.build_spec();
    let surface = spec.surface().clone();
    let rule = TriangleRule::with_degree(4);
    let (nodes, weights) = gauss_legendre_unit(5);

    let mut rates = InterpolationRates {
        h: Vec::new(),
        covariant_gradient: Vec::new(),
        l2_surface_projected: Vec::new(),
        l2_element_projected: Vec::new(),
        edge_surface_projected: Vec::new(),
        edge_element_projected: Vec::new(),
        energy: Vec::new(),
        orders: [0.0; 6],
    };

    for level in levels {
        let mut run = || -> Result<()> {
            let mesh = config.build_mesh(level)?;
            let space = Space::build(mesh)?;
            let interp = interpolate_tan(&space, &surface, |y| spec.solution(y))?;
            let norms = error_norms(&space, &spec, &interp, &rule)?;

            let mut edge_p = 0.0;
            let mut edge_ph = 0.0;
            for t in 0..space.mesh.n_triangles() {
                let p_h = space.frames[t].projector();
                for i in 0..3 {
                    let frame = &space.frames[t].edges[i];
                    let start = space.mesh.vertices[space.mesh.triangles[t][i]];
                    for (&s, &w) in nodes.iter().zip(&weights) {
                        let x = start + s * frame.length * frame.tangent;
                        let lifted = surface.closest_point(&x)?;
                        let u = spec.solution(&lifted.position)?;
                        let mut bary = [0.0; 3];
                        bary[i] = 1.0 - s;
                        bary[(i + 1) % 3] = s;
                        let v = space.evaluate(&interp, t, &bary)?;
                        let diff = u - v;
                        edge_p += w * frame.length * (lifted.projector * diff).norm_squared();
                        edge_ph += w * frame.length * (p_h * diff).norm_squared();
                    }
                }
            }

            rates.h.push(space.mesh.h);
            rates.covariant_gradient.push(norms.h1_seminorm);
            rates.l2_surface_projected.push(norms.l2_surface_projected);
            rates.l2_element_projected.push(norms.l2_element_projected);
            rates.edge_surface_projected.push(edge_p.sqrt());
            rates.edge_element_projected.push(edge_ph.sqrt());
            rates.energy.push(norms.energy);
            Ok(())
        };
        run().map_err(|e| e.at_level(level))?;
    }

    rates.orders = [
        least_squares_order(&rates.h, &rates.covariant_gradient),
        least_squares_order(&rates.h, &rates.l2_surface_projected),
        least_squares_order(&rates.h, &rates.l2_element_projected),
        least_squares_order(&rates.h, &rates.edge_surface_projected),
        least_squares_order(&rates.h, &rates.edge_element_projected),
        least_squares_order(&rates.h, &rates.energy),
    ];
    Ok(rates)
}

/// Outcome of one verification check.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A bundle of verification checks with an overall verdict.
#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn gate(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        self.checks.push(VerifyCheck {
            name: name.to_string(),
            passed: (lo..=hi).contains(&value),
            detail: format!("{value:.3} (required [{lo}, {hi}])"),
        });
    }

    fn bound(&mut self, name: &str, value: f64, max: f64) {
        self.checks.push(VerifyCheck {
            name: name.to_string(),
            passed: value <= max,
            detail: format!("{value:.3e} (required <= {max:.0e})"),
        });
    }

    fn merge(&mut self, other: VerifyReport) {
        self.checks.extend(other.checks);
    }
}

/// Geometric approximation rates on sphere levels 2-5: the projector gap
/// must shrink linearly and the in-plane conormal gap quadratically.
pub fn verify_geometry() -> Result<VerifyReport> {
    let surface = LevelSurface::unit_sphere();
    let meshes: Vec<SurfaceMesh> = (2..=5)
        .map(|level| build_sphere_mesh(&surface, level))
        .collect::<Result<_>>()?;
    let refs: Vec<&SurfaceMesh> = meshes.iter().collect();
    let rates = measure_geometry_rates(&surface, &refs)?;
    let mut report = VerifyReport::default();
    report.gate("geometry: projector gap order", rates.orders[0], 0.85, 1.15);
    report.gate(
        "geometry: in-plane conormal gap order",
        rates.orders[3],
        1.8,
        2.2,
    );
    // informational companions with wide gates
    report.gate("geometry: conormal gap order", rates.orders[1], 0.8, 1.3);
    report.gate(
        "geometry: tangential conormal gap order",
        rates.orders[2],
        1.8,
        2.3,
    );
    Ok(report)
}

/// Interpolation rates for the sphere study solution on levels 2-5.
pub fn verify_interpolation() -> Result<VerifyReport> {
    let config = StudyConfig {
        surface: SurfaceChoice::Sphere,
        ..StudyConfig::default()
    };
    let rates = interpolation_rates(&config, 2..=5)?;
    let mut report = VerifyReport::default();
    report.gate(
        "interpolation: covariant gradient order",
        rates.orders[0],
        0.85,
        1.15,
    );
    report.gate(
        "interpolation: surface-projected L2 order",
        rates.orders[1],
        1.8,
        2.2,
    );
    report.gate(
        "interpolation: element-projected L2 order",
        rates.orders[2],
        1.8,
        2.2,
    );
    report.gate(
        "interpolation: surface-projected edge order",
        rates.orders[3],
        1.3,
        1.7,
    );
    report.gate(
        "interpolation: element-projected edge order",
        rates.orders[4],
        1.3,
        1.7,
    );
    report.gate("interpolation: energy order", rates.orders[5], 0.85, 1.15);
    Ok(report)
}

/// Structural properties of random members of the discrete space: vanishing
/// edge-jump means and elementwise tangentiality.
pub fn verify_jumps() -> Result<VerifyReport> {
    use rand::prelude::*;
    let mut report = VerifyReport::default();
    let setups: Vec<(&str, Space)> = vec![
        (
            "sphere level 2",
            Space::build(build_sphere_mesh(&LevelSurface::unit_sphere(), 2)?)?,
        ),
        (
            "sphere level 3",
            Space::build(build_sphere_mesh(&LevelSurface::unit_sphere(), 3)?)?,
        ),
        (
            "torus 32x16",
            Space::build(build_torus_mesh(&LevelSurface::standard_torus(), 32, 16)?)?,
        ),
    ];
    let sample = TriangleRule::seven_point();
    for (name, space) in setups {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xc0ffee);
        let mut worst_jump = 0.0f64;
        let mut worst_normal = 0.0f64;
        for _ in 0..100 {
            let field = DiscreteField {
                coeffs: (0..space.n_dofs())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            };
            for [jn, jt] in edge_jump_means(&space, &field)? {
                worst_jump = worst_jump.max(jn.abs()).max(jt.abs());
            }
            for t in 0..space.mesh.n_triangles() {
                let n_h = space.frames[t].normal;
                for bary in &sample.points {
                    let v = space.evaluate(&field, t, bary)?;
                    worst_normal = worst_normal.max(v.dot(&n_h).abs());
                }
            }
        }
        report.bound(&format!("jumps: edge means ({name})"), worst_jump, 1e-12);
        report.bound(
            &format!("jumps: elementwise tangentiality ({name})"),
            worst_normal,
            1e-13,
        );
    }
    Ok(report)
}

/// Run all verification suites.
pub fn verify_all() -> Result<VerifyReport> {
    let mut report = verify_geometry()?;
    report.merge(verify_interpolation()?);
    report.merge(verify_jumps()?);
    Ok(report)
}
