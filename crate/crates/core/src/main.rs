//! Command-line driver for convergence studies and property verification.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use surface_cr::analysis::{
    run_study, verify_all, verify_geometry, verify_interpolation, verify_jumps, write_csv,
    write_json, StudyConfig, VerifyReport,
};
use surface_cr::mesh::write_off;
use surface_cr::{Error, Result};

/// Convergence studies for the tangential Crouzeix-Raviart discretization of
/// the vector Laplace problem on implicit surfaces.
#[derive(Debug, Parser)]
#[command(name = "surface-cr", version)]
struct Cli {
    /// Study surface: sphere or torus.
    #[arg(long)]
    surface: Option<String>,

    /// Inclusive refinement range, e.g. 2..6. Sphere levels are icosahedron
    /// subdivisions; torus level k uses a (16*2^k) x (8*2^k) grid.
    #[arg(long)]
    levels: Option<String>,

    /// Mass coefficient c of -Lap u + c u = f.
    #[arg(long)]
    mass_coeff: Option<f64>,

    /// Degree of the load quadrature (4 or 6).
    #[arg(long)]
    quad_degree: Option<usize>,

    /// Relative residual target of the conjugate gradient solver.
    #[arg(long)]
    cg_tol: Option<f64>,

    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format: csv or json.
    #[arg(long)]
    format: Option<String>,

    /// Write the finest study mesh to this path in OFF format.
    #[arg(long)]
    export_mesh: Option<PathBuf>,

    /// Run a property suite instead of a study:
    /// geometry, interpolation, jumps, or all.
    #[arg(long)]
    verify: Option<String>,

    /// Flat key=value config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ReportFormat {
    Csv,
    Json,
}

fn parse_levels(text: &str) -> Result<(u32, u32)> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("levels must look like a..b, got {text:?}")))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let lo: u32 = a
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad level {a:?}")))?;
    let hi: u32 = b
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad level {b:?}")))?;
    if lo > hi {
        return Err(Error::Parse(format!("empty level range {text:?}")));
    }
    Ok((lo, hi))
}

fn parse_format(text: &str) -> Result<ReportFormat> {
    match text {
        "csv" => Ok(ReportFormat::Csv),
        "json" => Ok(ReportFormat::Json),
        other => Err(Error::Parse(format!("unknown format {other:?}"))),
    }
}

/// Settings assembled from defaults, an optional config file, and flags.
struct Settings {
    study: StudyConfig,
    format: ReportFormat,
    out: Option<PathBuf>,
}

fn apply_key(settings: &mut Settings, key: &str, value: &str) -> Result<()> {
    match key {
        "surface" => settings.study.surface = value.parse()?,
        "levels" => {
            let (lo, hi) = parse_levels(value)?;
            settings.study.level_min = lo;
            settings.study.level_max = hi;
        }
        "mass_coeff" => {
            settings.study.mass_coeff = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad mass_coeff {value:?}")))?;
        }
        "quad_degree" => {
            settings.study.quad_degree = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad quad_degree {value:?}")))?;
        }
        "cg_tol" => {
            settings.study.cg_tol = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad cg_tol {value:?}")))?;
        }
        "format" => settings.format = parse_format(value)?,
        "out" => settings.out = Some(PathBuf::from(value)),
        other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
    }
    Ok(())
}

fn load_config(path: &PathBuf, settings: &mut Settings) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("config line {} is not key=value", lineno + 1))
        })?;
        apply_key(settings, key.trim(), value.trim())?;
    }
    Ok(())
}

fn resolve_settings(cli: &Cli) -> Result<Settings> {
    let mut settings = Settings {
        study: StudyConfig::default(),
        format: ReportFormat::Csv,
        out: None,
    };
    if let Some(path) = &cli.config {
        load_config(path, &mut settings)?;
    }
    if let Some(surface) = &cli.surface {
        settings.study.surface = surface.parse()?;
    }
    if let Some(levels) = &cli.levels {
        let (lo, hi) = parse_levels(levels)?;
        settings.study.level_min = lo;
        settings.study.level_max = hi;
    }
    if let Some(c) = cli.mass_coeff {
        settings.study.mass_coeff = c;
    }
    if let Some(d) = cli.quad_degree {
        settings.study.quad_degree = d;
    }
    if let Some(tol) = cli.cg_tol {
        settings.study.cg_tol = tol;
    }
    if let Some(format) = &cli.format {
        settings.format = parse_format(format)?;
    }
    if let Some(out) = &cli.out {
        settings.out = Some(out.clone());
    }
    Ok(settings)
}

fn print_verify(report: &VerifyReport) {
    for check in &report.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status}  {} — {}", check.name, check.detail);
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        println!("all {} checks passed", report.checks.len());
    } else {
        println!("{failed} of {} checks failed", report.checks.len());
    }
}

fn run_verify(which: &str) -> Result<VerifyReport> {
    match which {
        "geometry" => verify_geometry(),
        "interpolation" => verify_interpolation(),
        "jumps" => verify_jumps(),
        "all" => verify_all(),
        other => Err(Error::Parse(format!(
            "unknown verify suite {other:?}; expected geometry, interpolation, jumps, or all"
        ))),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(which) = &cli.verify {
        let report = run_verify(which)?;
        print_verify(&report);
        return Ok(report.passed());
    }

    let settings = resolve_settings(cli)?;
    let report = run_study(&settings.study)?;

    let mut buffer = Vec::new();
    match settings.format {
        ReportFormat::Csv => write_csv(&report, &mut buffer)?,
        ReportFormat::Json => write_json(&report, &mut buffer)?,
    }
    match &settings.out {
        Some(path) => std::fs::write(path, &buffer)?,
        None => std::io::stdout().write_all(&buffer)?,
    }

    if let Some(path) = &cli.export_mesh {
        let mesh = settings.study.build_mesh(settings.study.level_max)?;
        let file = std::fs::File::create(path)?;
        write_off(&mesh, std::io::BufWriter::new(file))?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
