//! Moving only the singular set along the boundary: tangential-field
//! derivatives and the point-singularity sweep `sigma -> H(Omega, {sigma})`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deform::{extend_boundary_field, CutoffProfile, TangentialProfile};
use crate::error::{HardyError, Result};
use crate::geometry::{Curve, Domain, Point, Submanifold};
use crate::mesh::{triangulate_with, MeshOptions};
use crate::sensitivity::{fd_oracle, shape_derivative, DerivativeOptions, ExtensionRecord, FdOptions, GatePolicy, SensitivityReport};
use crate::spectral::{Criticality, Discretization, HardySolution, MassOptions, SolverOptions};

/// Tangential boundary field and the tube used to extend it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryField {
    pub profile: TangentialProfile,
    /// Tube half-width.
    pub width: f64,
    #[serde(default)]
    pub cutoff: CutoffProfile,
}

/// Shape derivative along the tube extension of a tangential boundary field.
pub fn boundary_derivative(
    disc: &Discretization,
    sol: &HardySolution,
    domain: &Domain,
    field: &BoundaryField,
    opts: &DerivativeOptions,
) -> Result<SensitivityReport> {
    let xi = extend_boundary_field(domain, field.profile, field.width, field.cutoff)?;
    let mut report = shape_derivative(disc, sol, &xi, opts)?;
    report.extension = Some(ExtensionRecord {
        width: field.width,
        cutoff: format!("{:?}", field.cutoff).to_lowercase(),
        profile: serde_json::to_string(&field.profile).unwrap_or_default(),
    });
    Ok(report)
}

/// Unit-speed tangential bump centred at curve parameter `t`, with
/// arclength support `support` (converted with the local curve speed).
pub fn localized_tangent(curve: &Curve, t: f64, support: f64) -> TangentialProfile {
    let speed = curve.d1(t).norm();
    TangentialProfile::Bump { center: t, half_width: 0.5 * support / speed, speed: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub mesh: MeshOptions,
    pub mass: MassOptions,
    pub solver: SolverOptions,
    /// Also compute `dH/ds` at each sample by central differences of
    /// transported problems and compare with the boundary derivative.
    pub derivative: bool,
    /// Arclength support of the localized tangent, as a fraction of the perimeter.
    pub support_fraction: f64,
    pub tube_width: f64,
    pub cutoff: CutoffProfile,
    pub fd: FdOptions,
    pub gate: GatePolicy,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            mesh: MeshOptions::default(),
            mass: MassOptions::default(),
            solver: SolverOptions::default(),
            derivative: false,
            support_fraction: 0.2,
            tube_width: 0.3,
            cutoff: CutoffProfile::default(),
            fd: FdOptions::default(),
            gate: GatePolicy::Enforce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSample {
    /// Arclength from curve parameter zero.
    pub s: f64,
    pub point: Point,
    pub h: f64,
    pub criticality: Criticality,
    pub eigen_residual: f64,
    /// Central-difference `dH/ds` from transported problems.
    pub dh_ds: Option<f64>,
    pub dh_ds_step_error: Option<f64>,
    /// Boundary derivative along the localized unit tangent.
    pub boundary_derivative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub perimeter: f64,
    pub critical_value: f64,
    pub samples: Vec<SweepSample>,
    /// `(max H - min H) / mean H`.
    pub relative_spread: f64,
}

/// `H(Omega, {sigma(s_i)})` at each arclength `s_i`. Disks are meshed once and
/// rotated so every sample shares one discretisation up to a rigid motion.
pub fn hardy_boundary_sweep(domain: &Domain, s_grid: &[f64], opts: &SweepOptions) -> Result<SweepReport> {
    let src = domain
        .source()
        .ok_or_else(|| HardyError::InvalidDomain("boundary sweep needs a parametric boundary".into()))?;
    let curve = &src.curve;
    let perimeter = curve.arclength(0.0, curve.period());
    let params: Vec<f64> = s_grid.iter().map(|&s| curve.advance(0.0, s)).collect();
    let shared = match curve {
        Curve::Circle { center, .. } => {
            let p0 = curve.point(params.first().copied().unwrap_or(0.0));
            let mesh = triangulate_with(domain, &Submanifold::point(p0), &opts.mesh)?;
            Some((*center, p0, mesh))
        }
        _ => None,
    };
    let derivative_opts = DerivativeOptions { gate: opts.gate, ..DerivativeOptions::default() };
    let fd_opts = FdOptions { gate: opts.gate, ..opts.fd.clone() };
    let samples: Vec<SweepSample> = s_grid
        .par_iter()
        .zip(params.par_iter())
        .map(|(&s, &t)| {
            let point = curve.point(t);
            let mesh = match &shared {
                Some((c, p0, base)) => {
                    let a = (point - c).y.atan2((point - c).x) - (p0 - c).y.atan2((p0 - c).x);
                    let rot = nalgebra::Rotation2::new(a);
                    base.transformed(|p| c + rot * (p - c))
                }
                None => triangulate_with(domain, &Submanifold::point(point), &opts.mesh)?,
            };
            let disc = Discretization::new(mesh, &opts.mass)?;
            let sol = disc.solve(&opts.solver)?;
            let (mut dh_ds, mut err, mut bd) = (None, None, None);
            if opts.derivative {
                let field = BoundaryField {
                    profile: localized_tangent(curve, t, opts.support_fraction * perimeter),
                    width: opts.tube_width,
                    cutoff: opts.cutoff,
                };
                let xi = extend_boundary_field(domain, field.profile, field.width, field.cutoff)?;
                let fd = fd_oracle(&disc, &sol, &xi, &fd_opts, &opts.solver)?;
                dh_ds = Some(fd.estimate);
                err = Some(fd.step_error);
                bd = Some(boundary_derivative(&disc, &sol, domain, &field, &derivative_opts)?.derivative);
            }
            Ok(SweepSample {
                s,
                point,
                h: sol.h_value,
                criticality: sol.criticality,
                eigen_residual: sol.eigen_residual,
                dh_ds,
                dh_ds_step_error: err,
                boundary_derivative: bd,
            })
        })
        .collect::<Result<_>>()?;
    let hs: Vec<f64> = samples.iter().map(|s| s.h).collect();
    let max = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = hs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = hs.iter().sum::<f64>() / hs.len().max(1) as f64;
    Ok(SweepReport {
        perimeter,
        critical_value: crate::spectral::critical_value(0),
        samples,
        relative_spread: if hs.is_empty() { 0.0 } else { (max - min) / mean },
    })
}

/// Central differences of the sweep curve itself at interior samples.
pub fn curve_differences(report: &SweepReport) -> Vec<(f64, f64)> {
    report
        .samples
        .windows(3)
        .map(|w| (w[1].s, (w[2].h - w[0].h) / (w[2].s - w[0].s)))
        .collect()
}
