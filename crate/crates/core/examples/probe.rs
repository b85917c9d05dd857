use surface_cr::analysis::StudyConfig;
use surface_cr::assembly::{assemble, solve_cg};
use surface_cr::cr_space::Space;
use surface_cr::quadrature::TriangleRule;

fn norm(v: &[f64]) -> f64 { v.iter().map(|x| x * x).sum::<f64>().sqrt() }

fn main() {
    let config = StudyConfig { surface: surface_cr::analysis::SurfaceChoice::Sphere, level_min: 6, level_max: 6, ..Default::default() };
    let mesh = config.build_mesh(6).unwrap();
    let space = Space::build(mesh).unwrap();
    let spec = config.build_spec();
    let system = assemble(&space, &spec, &TriangleRule::six_point()).unwrap();
    let n = system.matrix.n;
    eprintln!("n = {n}, nnz = {}", system.matrix.nnz());
    eprintln!("|b|2 = {:.3e}, |b|inf = {:.3e}", norm(&system.rhs), system.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let row_abs_max = (0..n).map(|i| (system.matrix.row_ptr[i]..system.matrix.row_ptr[i+1]).map(|k| system.matrix.vals[k].abs()).sum::<f64>()).fold(0.0f64, f64::max);
    eprintln!("|A|inf = {:.3e}", row_abs_max);
    match solve_cg(&system, 1e-12) {
        Ok((x, stats)) => {
            eprintln!("converged iters={} res={:.3e} |x|2={:.3e} |x|inf={:.3e}", stats.iterations, stats.residual, norm(&x), x.iter().fold(0.0f64,|m,v| m.max(v.abs())));
        }
        Err(e) => {
            eprintln!("failed: {e}");
            // diagnose: run a manual solve with instrumentation
            let tol = 1e-12;
            let mut budget = 100000usize;
            let inv_diag: Vec<f64> = system.matrix.diagonal().into_iter().map(|d| 1.0/d).collect();
            let x = surface_cr::assembly::debug_pcg(&system.matrix, &inv_diag, &system.rhs, tol, &mut budget);
            let mut r = vec![0.0; n];
            system.matrix.residual_compensated(&x, &system.rhs, &mut r);
            eprintln!("main solve: iters={} true_rel={:.4e} |x|2={:.3e}", 100000-budget, norm(&r)/norm(&system.rhs), norm(&x));
            let mut x = x;
            for cycle in 0..6 {
                let mut budget2 = 100000usize;
                let d = surface_cr::assembly::debug_pcg(&system.matrix, &inv_diag, &r, 0.05, &mut budget2);
                for i in 0..n { x[i] += d[i]; }
                system.matrix.residual_compensated(&x, &system.rhs, &mut r);
                eprintln!("refine {cycle}: inner_iters={} |d|2={:.3e} true_rel={:.4e}", 100000-budget2, norm(&d), norm(&r)/norm(&system.rhs));
            }
        }
    }
}
