//! The `hardy` command line front end.

pub mod output;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use hardy_core::boundary_motion::hardy_boundary_sweep;
use hardy_core::config::{prepare, DomainSpec, ExperimentConfig, NamedField, Prepared};
use hardy_core::sensitivity::{
    continuity_ratio, fd_oracle, minimiser_stability, shape_derivative, ContinuityReport, FdReport, SensitivityReport,
    StabilitySample,
};
use hardy_core::spectral::{set_factorization_threads, Discretization, MassOptions};
use hardy_core::{HardyError, Result};
use serde::Serialize;

use output::{Emit, Table, Writer};

pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Parser)]
#[command(name = "hardy", version, about = "Hardy constants and their shape derivatives on planar domains")]
pub struct Cli {
    /// Experiment description (TOML, or JSON by extension). The shipped default is used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Sequential assembly and factorisation; outputs are bit-reproducible.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Emit::Both)]
    pub emit: Emit,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrete Hardy constant, minimiser and mesh.
    Solve,
    /// Shape derivative of every non-trivial field, with the finite-difference oracle attached.
    Derivative {
        #[arg(long)]
        field: Option<String>,
    },
    /// Continuity ratios, minimiser stability and the finite-difference series.
    Sweep {
        #[arg(long)]
        field: Option<String>,
    },
    /// `H(Omega, {sigma(s)})` as the point moves along the boundary.
    BoundarySweep {
        /// `disk[:r]`, `ellipse:a,b`, `slotted_disk:r,w,f`, `unit_square`, or an inline JSON domain.
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        /// Also compute `dH/ds` and the boundary derivative at each sample.
        #[arg(long)]
        derivative: bool,
    },
    /// Full invariant suite; exits nonzero on any violation.
    Verify,
}

#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub violations: usize,
    pub summary: String,
}

pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let (text, json) = match path {
        Some(p) => (std::fs::read_to_string(p)?, p.extension().is_some_and(|e| e == "json")),
        None => (DEFAULT_CONFIG.to_string(), false),
    };
    let cfg: ExperimentConfig = if json {
        serde_json::from_str(&text).map_err(|e| HardyError::ConfigInvalid { path: json_path(&e), message: e.to_string() })?
    } else {
        toml::from_str(&text).map_err(|e| HardyError::ConfigInvalid {
            path: e.span().map_or_else(|| "<document>".into(), |s| format!("byte {}", s.start)),
            message: e.message().to_string(),
        })?
    };
    cfg.validate()?;
    Ok(cfg)
}

fn json_path(e: &serde_json::Error) -> String {
    format!("line {} column {}", e.line(), e.column())
}

/// `disk`, `disk:0.8`, `ellipse:1.5,1`, `slotted_disk:1,0.01,0.1`, `unit_square` or `{...}` JSON.
pub fn parse_domain(text: &str) -> Result<DomainSpec> {
    let bad = |m: &str| HardyError::ConfigInvalid { path: "--domain".into(), message: m.into() };
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| bad(&e.to_string()));
    }
    let (kind, args) = text.split_once(':').unwrap_or((text, ""));
    let nums: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',').map(|a| a.trim().parse::<f64>().map_err(|e| bad(&e.to_string()))).collect::<Result<_>>()?
    };
    let samples = 512;
    match (kind, nums.as_slice()) {
        ("unit_square", []) => Ok(DomainSpec::UnitSquare),
        ("disk", []) => Ok(DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0, samples }),
        ("disk", [r]) => Ok(DomainSpec::Disk { center: [0.0, 0.0], radius: *r, samples }),
        ("ellipse", [a, b]) => Ok(DomainSpec::Ellipse { center: [0.0, 0.0], a: *a, b: *b, samples }),
        ("slotted_disk", [r, w, f]) => Ok(DomainSpec::SlottedDisk { radius: *r, half_width: *w, fillet: *f, samples }),
        _ => Err(bad(&format!("unrecognised domain `{text}`"))),
    }
}

fn selected<'a>(cfg: &'a ExperimentConfig, name: Option<&str>) -> Result<Vec<&'a NamedField>> {
    match name {
        Some(n) => cfg.field(n).map(|f| vec![f]).ok_or_else(|| HardyError::ConfigInvalid {
            path: "fields".into(),
            message: format!("no field named `{n}`"),
        }),
        None => Ok(cfg.fields.iter().filter(|f| !f.field.is_invariance()).collect()),
    }
}

#[derive(Serialize)]
struct FieldDerivative<'a> {
    field: &'a str,
    report: SensitivityReport,
}

#[derive(Serialize)]
struct FieldSweep<'a> {
    field: &'a str,
    continuity: Vec<ContinuityReport>,
    stability: Vec<StabilitySample>,
    oracle: FdReport,
}

fn minimiser_table(prep: &Prepared) -> Table {
    let mut t = Table::new(&["vertex", "x", "y", "u"]);
    for (i, (p, u)) in prep.disc.mesh.vertices.iter().zip(&prep.solution.minimiser).enumerate() {
        t.push(vec![i.into(), p.x.into(), p.y.into(), (*u).into()]);
    }
    t
}

fn solve_cmd(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    let prep = prepare(cfg)?;
    let sol = &prep.solution;
    w.json("solve", "solution.json", sol)?;
    let mesh = prep.disc.mesh.to_text();
    let (head, rest) = mesh.split_once('\n').unwrap_or((&mesh, ""));
    w.raw("mesh.txt", &format!("{head}\n{}\n{rest}", w.provenance()))?;
    w.csv("minimiser.csv", &minimiser_table(&prep))?;
    Ok(format!(
        "H = {:.12} ({:?}, critical {}), residual {:.2e}, {} vertices\n",
        sol.h_value, sol.criticality, sol.critical_value, sol.eigen_residual, sol.vertices
    ))
}

fn derivative_cmd(cfg: &ExperimentConfig, field: Option<&str>, w: &mut Writer) -> Result<String> {
    let prep = prepare(cfg)?;
    let mut out = Vec::new();
    let mut table = Table::new(&[
        "field",
        "derivative",
        "stiffness_part",
        "mass_part",
        "fd_estimate",
        "fd_step_error",
        "discrepancy",
        "skipped_fraction",
        "h",
    ]);
    let mut summary = String::new();
    for f in selected(cfg, field)? {
        let xi = f.field.build(&prep.domain)?;
        let mut report = shape_derivative(&prep.disc, &prep.solution, &xi, &cfg.derivative)?;
        let fd = fd_oracle(&prep.disc, &prep.solution, &xi, &cfg.fd, &cfg.solver)?;
        report.attach_oracle(fd);
        let oracle = report.oracle.as_ref().expect("attached");
        table.push(vec![
            f.name.as_str().into(),
            report.derivative.into(),
            report.stiffness_part.into(),
            report.mass_part.into(),
            oracle.estimate.into(),
            oracle.step_error.into(),
            report.discrepancy.into(),
            report.skipped_fraction.into(),
            report.h_value.into(),
        ]);
        summary += &format!(
            "{}: D = {:.10e}, FD = {:.10e}, discrepancy {:.2e}\n",
            f.name,
            report.derivative,
            oracle.estimate,
            report.discrepancy.unwrap_or(f64::NAN)
        );
        out.push(FieldDerivative { field: &f.name, report });
    }
    w.json("derivative", "derivative.json", &out)?;
    w.csv("derivative.csv", &table)?;
    Ok(summary)
}

fn sweep_cmd(cfg: &ExperimentConfig, field: Option<&str>, w: &mut Writer) -> Result<String> {
    let prep = prepare(cfg)?;
    let interior = if cfg.continuity.interior && !prep.disc.mass_options.interior {
        let opts = MassOptions { interior: true, ..prep.disc.mass_options };
        let disc = Discretization::new(prep.disc.mesh.clone(), &opts)?;
        let sol = disc.solve(&cfg.solver)?;
        Some((disc, sol))
    } else {
        None
    };
    let mut out = Vec::new();
    let mut cont = Table::new(&["field", "mode", "t", "deviation", "h", "delta_h", "ratio"]);
    let mut stab = Table::new(&["field", "t", "h", "distance"]);
    let mut fd_table = Table::new(&["field", "t", "h", "base_quotient_of_moved", "moved_quotient_of_base"]);
    let mut summary = String::new();
    for f in selected(cfg, field)? {
        let xi = f.field.build(&prep.domain)?;
        let mut continuity = vec![continuity_ratio(
            &prep.disc,
            &prep.solution,
            &xi,
            &cfg.continuity.t_grid,
            &cfg.solver,
            cfg.continuity.grid,
        )?];
        if let Some((disc, sol)) = &interior {
            continuity.push(continuity_ratio(disc, sol, &xi, &cfg.continuity.t_grid, &cfg.solver, cfg.continuity.grid)?);
        }
        let stability = minimiser_stability(&prep.disc, &prep.solution, &xi, &cfg.stability.t_grid, &cfg.solver)?;
        let oracle = fd_oracle(&prep.disc, &prep.solution, &xi, &cfg.fd, &cfg.solver)?;
        for c in &continuity {
            let mode = format!("{:?}", c.mode).to_lowercase();
            for s in &c.samples {
                cont.push(vec![
                    f.name.as_str().into(),
                    mode.as_str().into(),
                    s.t.into(),
                    s.deviation.into(),
                    s.h.into(),
                    s.delta_h.into(),
                    s.ratio.into(),
                ]);
            }
            summary += &format!(
                "{} [{mode}]: sup ratio {:.4e}, median {:.4e}\n",
                f.name,
                c.sup_ratio.unwrap_or(f64::NAN),
                c.median_ratio.unwrap_or(f64::NAN)
            );
        }
        for s in &stability {
            stab.push(vec![f.name.as_str().into(), s.t.into(), s.h.into(), s.distance.into()]);
        }
        for s in &oracle.samples {
            fd_table.push(vec![
                f.name.as_str().into(),
                s.t.into(),
                s.h.into(),
                s.base_quotient_of_moved.into(),
                s.moved_quotient_of_base.into(),
            ]);
        }
        summary += &format!("{}: FD estimate {:.10e} (step error {:.2e})\n", f.name, oracle.estimate, oracle.step_error);
        out.push(FieldSweep { field: &f.name, continuity, stability, oracle });
    }
    w.json("sweep", "sweep.json", &out)?;
    w.csv("continuity.csv", &cont)?;
    w.csv("stability.csv", &stab)?;
    w.csv("fd.csv", &fd_table)?;
    Ok(summary)
}

fn boundary_sweep_cmd(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String> {
    let domain = cfg.domain.build()?;
    let perimeter = domain
        .source()
        .map(|s| s.curve.arclength(0.0, s.curve.period()))
        .ok_or_else(|| HardyError::InvalidDomain("boundary sweep needs a parametric boundary".into()))?;
    let grid = cfg.boundary_sweep.grid(perimeter);
    let report = hardy_boundary_sweep(&domain, &grid, &cfg.sweep_options())?;
    let mut t = Table::new(&[
        "s",
        "x",
        "y",
        "h",
        "criticality",
        "eigen_residual",
        "dh_ds",
        "dh_ds_step_error",
        "boundary_derivative",
    ]);
    for s in &report.samples {
        t.push(vec![
            s.s.into(),
            s.point.x.into(),
            s.point.y.into(),
            s.h.into(),
            format!("{:?}", s.criticality).into(),
            s.eigen_residual.into(),
            s.dh_ds.into(),
            s.dh_ds_step_error.into(),
            s.boundary_derivative.into(),
        ]);
    }
    w.json("boundary-sweep", "boundary_sweep.json", &report)?;
    w.csv("boundary_sweep.csv", &t)?;
    Ok(format!(
        "{} samples over perimeter {:.6}, relative spread {:.3e}\n",
        report.samples.len(),
        report.perimeter,
        report.relative_spread
    ))
}

fn verify_cmd(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(String, usize)> {
    let report = match prepare(cfg).and_then(|prep| verify::run_checks(cfg, &prep)) {
        Ok(r) => r,
        Err(e) => verify::VerifyReport { h_value: f64::NAN, critical_value: f64::NAN, checks: vec![e.into()] },
    };
    w.json("verify", "verify.json", &report)?;
    w.csv("verify.csv", &report.table())?;
    Ok((report.summary(), report.violations()))
}

/// Executes one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Command::BoundarySweep { domain, samples, derivative } = &cli.command {
        if let Some(d) = domain {
            cfg.domain = parse_domain(d)?;
        }
        if let Some(n) = samples {
            cfg.boundary_sweep.samples = *n;
        }
        cfg.boundary_sweep.derivative |= *derivative;
    }
    cfg.deterministic |= cli.deterministic;
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    set_factorization_threads(if cfg.deterministic { None } else { Some(threads) });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HardyError::Io(e.to_string()))?;
    let mut w = Writer::new(&cli.out_dir, cli.emit, &cfg)?;
    let (summary, violations) = pool.install(|| -> Result<(String, usize)> {
        Ok(match &cli.command {
            Command::Solve => (solve_cmd(&cfg, &mut w)?, 0),
            Command::Derivative { field } => (derivative_cmd(&cfg, field.as_deref(), &mut w)?, 0),
            Command::Sweep { field } => (sweep_cmd(&cfg, field.as_deref(), &mut w)?, 0),
            Command::BoundarySweep { .. } => (boundary_sweep_cmd(&cfg, &mut w)?, 0),
            Command::Verify => verify_cmd(&cfg, &mut w)?,
        })
    })?;
    Ok(Outcome { files: w.written, violations, summary })
}
