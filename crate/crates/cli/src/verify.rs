//! Invariant suite run by `hardy verify`.

use std::fmt::Write as _;

use hardy_core::config::{ExperimentConfig, FieldSpec, Prepared};
use hardy_core::deform::Diffeomorphism;
use hardy_core::geometry::{Point, SigmaSet, Submanifold};
use hardy_core::sensitivity::{
    deviation_on_hulls, distance_perturbation_bound, distance_sq_derivative, fd_oracle, shape_derivative, transported_distance,
    DerivativeOptions, FdOptions, GatePolicy,
};
use hardy_core::spectral::Discretization;
use hardy_core::{DeformationField, HardyError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub status: Status,
    pub note: String,
}

impl Check {
    fn le(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let status = if value <= tolerance { Status::Pass } else { Status::Fail };
        Check { name: name.into(), value, tolerance, status, note: String::new() }
    }

    fn skip(name: impl Into<String>, note: impl Into<String>) -> Self {
        Check { name: name.into(), value: f64::NAN, tolerance: f64::NAN, status: Status::Skip, note: note.into() }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub h_value: f64,
    pub critical_value: f64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["check", "status", "value", "tolerance", "note"]);
        for c in &self.checks {
            let status = format!("{:?}", c.status).to_lowercase();
            t.push(vec![c.name.as_str().into(), status.into(), c.value.into(), c.tolerance.into(), c.note.as_str().into()]);
        }
        t
    }

    pub fn summary(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut s = format!("{:<width$}  {:<6}  {:>12}  {:>12}  note\n", "check", "status", "value", "tolerance");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            let _ = writeln!(s, "{:<width$}  {status:<6}  {:>12.4e}  {:>12.4e}  {}", c.name, c.value, c.tolerance, c.note);
        }
        let _ = writeln!(s, "{} checks, {} violations", self.checks.len(), self.violations());
        s
    }
}

/// Fields whose derivative vanishes identically, always checked.
fn builtin_invariances() -> Vec<(String, FieldSpec)> {
    vec![
        ("constant".into(), FieldSpec::Constant { vector: [1.0, -0.5] }),
        ("rotation".into(), FieldSpec::Rotation),
        ("dilation".into(), FieldSpec::Dilation),
    ]
}

fn random_probes(prep: &Prepared, n: usize, seed: u64) -> Vec<Point> {
    let mesh = &prep.disc.mesh;
    let (mut lo, mut hi) = (Point::repeat(f64::INFINITY), Point::repeat(f64::NEG_INFINITY));
    for p in &mesh.vertices {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 1000 * n {
        tries += 1;
        let p = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if prep.domain.contains(&p) && prep.disc.sigma.distance(&p) > 1e-3 {
            out.push(p);
        }
    }
    out
}

/// Relative mismatch between the pointwise derivative of `d^2` and a
/// Richardson central difference of the transported squared distance.
fn distance_probe_error(x: &Point, sigma: &SigmaSet, xi: &DeformationField) -> Option<f64> {
    if sigma.foot_gap(x) < 0.05 {
        return None;
    }
    let exact = distance_sq_derivative(x, sigma, xi).ok()?;
    let d2 = |t: f64| transported_distance(x, sigma, &Diffeomorphism::along(xi, t)).powi(2);
    let h = 1e-2;
    let c1 = (d2(h) - d2(-h)) / (2.0 * h);
    let c2 = (d2(h / 2.0) - d2(-h / 2.0)) / h;
    let fd = (4.0 * c2 - c1) / 3.0;
    let scale = exact.abs().max(1e-6 * sigma.distance(x).powi(2));
    Some((fd - exact).abs() / scale)
}

pub fn run_checks(cfg: &ExperimentConfig, prep: &Prepared) -> Result<VerifyReport> {
    let Prepared { domain, disc, solution: sol } = prep;
    let h = sol.h_value;
    let mut checks = Vec::new();
    checks.push(Check::le("eigen_residual", sol.eigen_residual, 10.0 * cfg.solver.tol));
    checks.push(Check::le("normalization", sol.normalization_residual, cfg.derivative.normalization_tol));

    let zero_opts = DerivativeOptions { gate: GatePolicy::Override, ..cfg.derivative };
    let mut invariances = builtin_invariances();
    invariances.extend(cfg.fields.iter().filter(|f| f.field.is_invariance()).map(|f| (f.name.clone(), f.field.clone())));
    for (name, spec) in &invariances {
        let xi = spec.build(domain)?;
        let r = shape_derivative(disc, sol, &xi, &zero_opts)?;
        checks.push(Check::le(format!("zero_derivative[{name}]"), r.derivative.abs() / h, 1e-8));
    }

    let candidates = random_probes(prep, 1000, 0x5eed);
    let probes = &candidates[..100.min(candidates.len())];
    let boundary = disc.mesh.boundary_polygon();
    let fd_opts = FdOptions { gate: GatePolicy::Override, ..cfg.fd.clone() };
    for f in cfg.fields.iter().filter(|f| !f.field.is_invariance()) {
        let xi = f.field.build(domain)?;
        let fd = fd_oracle(disc, sol, &xi, &fd_opts, &cfg.solver)?;
        let worst_chain = fd
            .samples
            .iter()
            .map(|s| {
                let lower = s.h - s.base_quotient_of_moved;
                let upper = s.moved_quotient_of_base - h;
                let delta = s.h - h;
                (lower - delta).max(delta - upper).max(0.0)
            })
            .fold(0.0, f64::max);
        checks.push(Check::le(format!("inequality_chain[{}]", f.name), worst_chain / h, 1e-8));

        let name = format!("derivative_vs_fd[{}]", f.name);
        if h <= 0.9 * sol.critical_value {
            let r = shape_derivative(disc, sol, &xi, &zero_opts)?;
            let rel = (r.derivative - fd.estimate).abs() / fd.estimate.abs().max(f64::MIN_POSITIVE);
            let tol = 0.02f64.max(5.0 * fd.step_error / fd.estimate.abs().max(f64::MIN_POSITIVE));
            checks.push(Check::le(name, rel, tol).note(format!("D = {:.6e}, FD = {:.6e}", r.derivative, fd.estimate)));
        } else {
            checks.push(Check::skip(name, format!("H = {h:.6} above 0.9 x critical value")));
        }

        let errs: Vec<f64> = candidates.iter().filter_map(|x| distance_probe_error(x, &disc.sigma, &xi)).take(100).collect();
        let worst = errs.iter().copied().fold(0.0, f64::max);
        checks.push(Check::le(format!("distance_derivative[{}]", f.name), worst, 1e-6).note(format!("{} probes", errs.len())));

        let t = 1e-2;
        let lip = deviation_on_hulls(&Diffeomorphism::along(&xi, 1e-3), &boundary, 64)? / 1e-3;
        let allowed = (2.0 * lip + t * lip * lip) / (1.0 - t * lip).powi(2) * (1.0 + 1e-6) + 1e-9;
        let mut worst: f64 = 0.0;
        for x in probes {
            worst = worst.max(distance_perturbation_bound(x, &disc.sigma, &xi, &[t, -t, 1e-3, -1e-3])?);
        }
        checks.push(Check::le(format!("distance_transport[{}]", f.name), worst, allowed));
    }

    if cfg.sigma != Submanifold::FullBoundary {
        let other = Discretization::new(disc.mesh.with_boundary_sigma(), &disc.mass_options)?.solve(&cfg.solver)?;
        checks.push(
            Check::le("monotonicity", (other.h_value - h) / h, 1e-10).note(format!("H(full boundary) = {:.8}", other.h_value)),
        );
    }

    let (sn, cs) = 0.7f64.sin_cos();
    let shift = Point::new(0.3, -0.2);
    for (name, mesh) in [
        ("rigid_invariance", disc.mesh.transformed(|p| Point::new(cs * p.x - sn * p.y, sn * p.x + cs * p.y) + shift)),
        ("dilation_invariance", disc.mesh.transformed(|p| p * 1.7)),
    ] {
        let moved = Discretization::new(mesh, &disc.mass_options)?.solve(&cfg.solver)?;
        checks.push(Check::le(name, (moved.h_value - h).abs() / h, 1e-10));
    }
    Ok(VerifyReport { h_value: h, critical_value: sol.critical_value, checks })
}

impl From<HardyError> for Check {
    fn from(e: HardyError) -> Self {
        Check { name: e.code().to_lowercase(), value: f64::NAN, tolerance: f64::NAN, status: Status::Fail, note: e.to_string() }
    }
}
