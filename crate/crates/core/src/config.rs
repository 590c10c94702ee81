//! Declarative experiment description shared by the command line and the tests.

use serde::{Deserialize, Serialize};

use crate::boundary_motion::{BoundaryField, SweepOptions};
use crate::deform::{extend_boundary_field, CutoffProfile, DeformationField};
use crate::error::{HardyError, Result};
use crate::geometry::{Curve, Domain, Mat2, Point, Submanifold};
use crate::mesh::{triangulate_with, MeshOptions};
use crate::sensitivity::{DerivativeOptions, FdOptions, GatePolicy};
use crate::spectral::{DecayWindow, Discretization, HardySolution, MassOptions, SolverOptions};

pub const SCHEMA_VERSION: u32 = 1;

fn origin() -> [f64; 2] {
    [0.0, 0.0]
}

fn curve_samples() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    UnitSquare,
    Rectangle {
        lo: [f64; 2],
        hi: [f64; 2],
    },
    LShape {
        size: f64,
    },
    Polygon {
        points: Vec<[f64; 2]>,
    },
    Disk {
        #[serde(default = "origin")]
        center: [f64; 2],
        radius: f64,
        #[serde(default = "curve_samples")]
        samples: usize,
    },
    Ellipse {
        #[serde(default = "origin")]
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default = "curve_samples")]
        samples: usize,
    },
    SlottedDisk {
        radius: f64,
        half_width: f64,
        fillet: f64,
        #[serde(default = "curve_samples")]
        samples: usize,
    },
    Horseshoe {
        inner: f64,
        outer: f64,
        half_opening: f64,
        #[serde(default = "curve_samples")]
        samples: usize,
    },
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        match self {
            DomainSpec::UnitSquare => Ok(Domain::unit_square()),
            DomainSpec::Rectangle { lo, hi } => {
                if !(hi[0] > lo[0] && hi[1] > lo[1]) {
                    return Err(HardyError::InvalidDomain("rectangle corners out of order".into()));
                }
                Ok(Domain::rectangle(pt(*lo), pt(*hi)))
            }
            DomainSpec::LShape { size } => {
                if !(*size > 0.0) {
                    return Err(HardyError::InvalidDomain("size must be positive".into()));
                }
                Ok(Domain::l_shape(*size))
            }
            DomainSpec::Polygon { points } => Domain::polygon(points.iter().copied().map(pt).collect()),
            DomainSpec::Disk { center, radius, samples } => {
                Domain::from_curve(Curve::Circle { center: pt(*center), radius: *radius }, *samples, 0.0)
            }
            DomainSpec::Ellipse { center, a, b, samples } => {
                Domain::from_curve(Curve::Ellipse { center: pt(*center), a: *a, b: *b, rotation: 0.0 }, *samples, 0.0)
            }
            DomainSpec::SlottedDisk { radius, half_width, fillet, samples } => {
                if !(*half_width > 0.0 && *fillet > 0.0 && half_width + 2.0 * fillet < *radius) {
                    return Err(HardyError::InvalidDomain("slot does not fit in the disk".into()));
                }
                Domain::from_curve(Curve::slotted_disk(*radius, *half_width, *fillet), *samples, 0.0)
            }
            DomainSpec::Horseshoe { inner, outer, half_opening, samples } => {
                Domain::from_curve(Curve::horseshoe(*inner, *outer, *half_opening), *samples, 0.0)
            }
        }
    }
}

/// Serializable description of a deformation field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    Constant { vector: [f64; 2] },
    /// `x -> A x`, rows of `A`.
    Linear { matrix: [[f64; 2]; 2] },
    Dilation,
    Rotation,
    RadialBump { center: [f64; 2], radius: f64, amplitude: f64 },
    DirectionalBump { center: [f64; 2], radius: f64, vector: [f64; 2] },
    Boundary(BoundaryField),
    Sum { terms: Vec<FieldSpec> },
    Scaled { factor: f64, field: Box<FieldSpec> },
}

impl FieldSpec {
    pub fn build(&self, domain: &Domain) -> Result<DeformationField> {
        Ok(match self {
            FieldSpec::Zero => DeformationField::zero(),
            FieldSpec::Constant { vector } => DeformationField::Constant(pt(*vector)),
            FieldSpec::Linear { matrix: m } => DeformationField::Linear(Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1])),
            FieldSpec::Dilation => DeformationField::dilation(),
            FieldSpec::Rotation => DeformationField::rotation(),
            FieldSpec::RadialBump { center, radius, amplitude } => {
                DeformationField::RadialBump { center: pt(*center), radius: *radius, amplitude: *amplitude }
            }
            FieldSpec::DirectionalBump { center, radius, vector } => {
                DeformationField::DirectionalBump { center: pt(*center), radius: *radius, vector: pt(*vector) }
            }
            FieldSpec::Boundary(b) => extend_boundary_field(domain, b.profile, b.width, b.cutoff)?,
            FieldSpec::Sum { terms } => DeformationField::Sum(terms.iter().map(|f| f.build(domain)).collect::<Result<_>>()?),
            FieldSpec::Scaled { factor, field } => field.build(domain)?.scaled(*factor),
        })
    }

    /// Constant, skew-linear and dilation fields, for which the derivative vanishes identically.
    pub fn is_invariance(&self) -> bool {
        match self {
            FieldSpec::Zero | FieldSpec::Constant { .. } | FieldSpec::Dilation | FieldSpec::Rotation => true,
            FieldSpec::Linear { matrix: m } => m[0][0] == m[1][1] && m[0][1] == -m[1][0],
            FieldSpec::Scaled { field, .. } => field.is_invariance(),
            FieldSpec::Sum { terms } => terms.iter().all(FieldSpec::is_invariance),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedField {
    pub name: String,
    #[serde(flatten)]
    pub field: FieldSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityConfig {
    pub t_grid: Vec<f64>,
    /// Points per axis when sampling `|| D phi - I ||`.
    pub grid: usize,
    /// Repeat the experiment with the interior distance.
    pub interior: bool,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        ContinuityConfig { t_grid: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3], grid: 128, interior: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub t_grid: Vec<f64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig { t_grid: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySweepConfig {
    pub samples: usize,
    /// Fraction of the perimeter covered, starting at arclength zero.
    pub arc_fraction: f64,
    pub derivative: bool,
    pub tube_width: f64,
    pub support_fraction: f64,
    pub cutoff: CutoffProfile,
    pub gate: GatePolicy,
}

impl Default for BoundarySweepConfig {
    fn default() -> Self {
        BoundarySweepConfig {
            samples: 8,
            arc_fraction: 1.0,
            derivative: false,
            tube_width: 0.3,
            support_fraction: 0.2,
            cutoff: CutoffProfile::Quintic,
            gate: GatePolicy::Enforce,
        }
    }
}

impl BoundarySweepConfig {
    /// Equispaced arclengths covering `arc_fraction` of `perimeter`, endpoint excluded.
    pub fn grid(&self, perimeter: f64) -> Vec<f64> {
        let n = self.samples.max(1);
        (0..n).map(|k| self.arc_fraction * perimeter * k as f64 / n as f64).collect()
    }
}

/// Everything needed to reproduce one configuration's experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub domain: DomainSpec,
    pub sigma: Submanifold,
    #[serde(default)]
    pub mesh: MeshOptions,
    #[serde(default)]
    pub mass: MassOptions,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub derivative: DerivativeOptions,
    #[serde(default)]
    pub fd: FdOptions,
    #[serde(default)]
    pub fields: Vec<NamedField>,
    #[serde(default)]
    pub continuity: ContinuityConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub decay: Option<DecayWindow>,
    #[serde(default)]
    pub boundary_sweep: BoundarySweepConfig,
    #[serde(default)]
    pub deterministic: bool,
}

fn invalid(path: &str, message: impl Into<String>) -> HardyError {
    HardyError::ConfigInvalid { path: path.into(), message: message.into() }
}

impl ExperimentConfig {
    /// Checks the schema version and value ranges; geometry errors are reported under their section.
    pub fn validate(&self) -> Result<Domain> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if !(self.mesh.h > 0.0) {
            return Err(invalid("mesh.h", "must be positive"));
        }
        if let Some(b) = self.mesh.beta {
            if !(0.0..=1.0).contains(&b) {
                return Err(invalid("mesh.beta", "must lie in [0, 1]"));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.krylov == 0 {
            return Err(invalid("solver", "tolerance and krylov size must be positive"));
        }
        if !(0.0..1.0).contains(&self.solver.margin) {
            return Err(invalid("solver.margin", "must lie in [0, 1)"));
        }
        if self.fd.steps.is_empty() || self.fd.steps.iter().any(|t| !(*t > 0.0)) {
            return Err(invalid("fd.steps", "need at least one positive step"));
        }
        for (path, grid) in [("continuity.t_grid", &self.continuity.t_grid), ("stability.t_grid", &self.stability.t_grid)] {
            if grid.iter().any(|t| *t == 0.0 || !t.is_finite()) {
                return Err(invalid(path, "entries must be finite and nonzero"));
            }
        }
        let mut names: Vec<&str> = self.fields.iter().map(|f| f.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("fields", "names must be unique"));
        }
        let domain = self.domain.build().map_err(|e| invalid("domain", e.to_string()))?;
        self.sigma.validate(&domain).map_err(|e| invalid("sigma", e.to_string()))?;
        for (k, f) in self.fields.iter().enumerate() {
            f.field.build(&domain).map_err(|e| invalid(&format!("fields[{k}]"), e.to_string()))?;
        }
        Ok(domain)
    }

    pub fn mass_options(&self) -> MassOptions {
        MassOptions { parallel: self.mass.parallel && !self.deterministic, ..self.mass }
    }

    pub fn field(&self, name: &str) -> Option<&NamedField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            mesh: self.mesh.clone(),
            mass: self.mass_options(),
            solver: self.solver,
            derivative: self.boundary_sweep.derivative,
            support_fraction: self.boundary_sweep.support_fraction,
            tube_width: self.boundary_sweep.tube_width,
            cutoff: self.boundary_sweep.cutoff,
            fd: self.fd.clone(),
            gate: self.boundary_sweep.gate,
        }
    }
}

/// Meshed, assembled and solved base problem of a configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub domain: Domain,
    pub disc: Discretization,
    pub solution: HardySolution,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let domain = cfg.validate()?;
    let mesh = triangulate_with(&domain, &cfg.sigma, &cfg.mesh)?;
    let disc = Discretization::new(mesh, &cfg.mass_options())?;
    let solution = disc.solve(&cfg.solver)?;
    Ok(Prepared { domain, disc, solution })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
                "schema_version": 1,
                "name": "t",
                "domain": {"kind": "unit_square"},
                "sigma": {"kind": "full_boundary"},
                "mesh": {"h": 0.2},
                "fields": [{"name": "b", "kind": "radial_bump", "center": [0.5, 0.5], "radius": 0.3, "amplitude": 1.0}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = sample();
        assert_eq!(c.solver, SolverOptions::default());
        assert_eq!(c.fd.steps, vec![1e-3, 5e-4]);
        assert!(c.validate().is_ok());
        assert!(c.field("b").is_some());
    }

    #[test]
    fn bad_values_name_their_path() {
        let mut c = sample();
        c.schema_version = 7;
        assert!(matches!(c.validate(), Err(HardyError::ConfigInvalid { path, .. }) if path == "schema_version"));
        let mut c = sample();
        c.mesh.h = -1.0;
        assert!(matches!(c.validate(), Err(HardyError::ConfigInvalid { path, .. }) if path == "mesh.h"));
        let mut c = sample();
        c.sigma = Submanifold::point(Point::new(0.5, 0.5));
        assert!(matches!(c.validate(), Err(HardyError::ConfigInvalid { path, .. }) if path == "sigma"));
    }

    #[test]
    fn invariance_classification() {
        assert!(FieldSpec::Linear { matrix: [[0.5, -2.0], [2.0, 0.5]] }.is_invariance());
        assert!(!FieldSpec::Linear { matrix: [[1.0, 0.0], [0.0, 2.0]] }.is_invariance());
    }
}
