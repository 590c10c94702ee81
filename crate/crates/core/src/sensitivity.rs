//! Shape derivatives of the Hardy constant, perturbation estimates and the
//! finite-difference checks they are compared against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deform::{sample_points, DeformationField, Diffeomorphism};
use crate::error::{HardyError, Result};
use crate::geometry::{convex_hull, DistanceSample, Domain, Point, SigmaSet};
use crate::mesh::{map_mesh, TriMesh};
use crate::quadrature::{SplitQuadrature, TriRule};
use crate::spectral::{
    anchor, assemble_hardy_mass, node_offset, p1_gradients, per_element, touch_patterns, tri_points, Criticality, Discretization,
    HardySolution, MassOptions, SolverOptions, SymmetricSparseForm,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatePolicy {
    /// Refuse near-critical solutions.
    #[default]
    Enforce,
    /// Evaluate anyway and flag the report.
    Override,
}

impl GatePolicy {
    fn check(self, sol: &HardySolution) -> Result<bool> {
        match (self, sol.criticality) {
            (_, Criticality::Subcritical) => Ok(false),
            (GatePolicy::Enforce, Criticality::NearCritical) => sol.gate().map(|_| false),
            (GatePolicy::Override, Criticality::NearCritical) => Ok(true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DerivativeOptions {
    pub gate: GatePolicy,
    /// Split levels added to the mass depth for the singular part.
    pub extra_depth: u32,
    /// Largest tolerated fraction of quadrature weight with a non-unique foot.
    pub max_skipped: f64,
    pub normalization_tol: f64,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        DerivativeOptions { gate: GatePolicy::Enforce, extra_depth: 2, max_skipped: 1e-3, normalization_tol: 1e-8 }
    }
}

/// `d/dt d^2_{(id + t xi)(Sigma)}((id + t xi)(x))` at `t = 0`.
pub fn distance_sq_derivative(x: &Point, sigma: &SigmaSet, xi: &DeformationField) -> Result<f64> {
    let s = sigma.nearest(x);
    if !s.unique {
        return Err(HardyError::NonUniqueFoot);
    }
    Ok(2.0 * (x - s.foot).dot(&(xi.value(x) - xi.value(&s.foot))))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b)).min(fc).min(fd)
}

/// Distance from `phi(x)` to `phi(Sigma)`, where segments of `Sigma` map to curves.
/// Features farther than three times `d_Sigma(x)` are ignored, which is exact
/// while the C1 deviation of `phi` stays below one half.
pub fn transported_distance(x: &Point, sigma: &SigmaSet, phi: &Diffeomorphism) -> f64 {
    let d = sigma.distance(x);
    let local = sigma.local(x, d);
    let y = phi.apply(x);
    let mut best = local.points().map(|p| (phi.apply(p) - y).norm_squared()).fold(f64::INFINITY, f64::min);
    for [a, b] in local.segments() {
        let f = |s: f64| (phi.apply(&(a + (b - a) * s)) - y).norm_squared();
        let n = 16;
        let k = (0..=n).min_by(|&i, &j| f(i as f64 / n as f64).total_cmp(&f(j as f64 / n as f64))).unwrap_or(0);
        let lo = (k as f64 - 1.0).max(0.0) / n as f64;
        let hi = (k as f64 + 1.0).min(n as f64) / n as f64;
        best = best.min(golden_min(f, lo, hi)).min(f(0.0)).min(f(1.0));
    }
    best.sqrt()
}

/// Largest `|d_t^2 - d^2| / (d^2 |t|)` over the grid, with `d_t` the
/// transported distance under `id + t xi`.
pub fn distance_perturbation_bound(x: &Point, sigma: &SigmaSet, xi: &DeformationField, t_grid: &[f64]) -> Result<f64> {
    let d = sigma.distance(x);
    if !(d > 0.0) {
        return Err(HardyError::DegenerateInput("probe lies on the singular set".into()));
    }
    let mut worst: f64 = 0.0;
    for &t in t_grid.iter().filter(|t| **t != 0.0) {
        let dt = transported_distance(x, sigma, &Diffeomorphism::along(xi, t));
        worst = worst.max((dt * dt - d * d).abs() / (d * d * t.abs()));
    }
    if !worst.is_finite() {
        return Err(HardyError::DegenerateInput("non-finite distance ratio".into()));
    }
    Ok(worst)
}

/// Integrates `f` over the mesh with split quadrature toward the singular
/// set. `f` returns the integrand and a magnitude used to judge ties: nodes
/// with several feet are kept only when every foot gives the same value.
/// Dropped weight is made up by rescaling the rest of the element.
fn integrate_singular<const K: usize>(
    mesh: &TriMesh,
    sigma: &SigmaSet,
    degree: u32,
    depth: u32,
    parallel: bool,
    max_skipped: f64,
    f: impl Fn(usize, &[f64; 3], &Point, &DistanceSample) -> ([f64; K], f64) + Sync + Send,
) -> Result<([f64; K], f64)> {
    let quad = SplitQuadrature::new(degree, depth);
    let touch = touch_patterns(mesh);
    let parts = per_element(mesh.triangles.len(), parallel, |t| {
        let p = tri_points(mesh, t);
        let k = anchor(&touch[t]);
        let local = sigma.local(&mesh.centroid(t), mesh.element_diameter(t)).relative_to(&p[k]);
        let mut sum = [0.0; K];
        let mut kept = 0.0;
        let mut dropped = 0.0;
        for (l, w) in quad.nodes(&touch[t]) {
            let offset = node_offset(&p, k, l);
            let x = p[k] + offset;
            let s = local.nearest(&offset);
            if s.distance <= 0.0 {
                return Err(HardyError::SingularNode(t));
            }
            let value = if s.unique {
                f(t, l, &x, &s).0
            } else {
                // a tie is harmless when every foot gives the same integrand
                let vals: Vec<([f64; K], f64)> = local.ties(&offset).iter().map(|s| f(t, l, &x, s)).collect();
                let scale = vals.iter().map(|v| v.1).fold(0.0, f64::max);
                let agree = (0..K).all(|k| {
                    let (lo, hi) =
                        vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.0[k]), b.max(v.0[k])));
                    hi - lo <= 1e-12 * scale
                });
                if !agree {
                    dropped += w;
                    continue;
                }
                vals[0].0
            };
            kept += w;
            for (acc, v) in sum.iter_mut().zip(value) {
                *acc += w * v;
            }
        }
        let area = mesh.signed_area(t);
        let scale = if kept > 0.0 { area / kept } else { 0.0 };
        Ok((sum.map(|v| v * scale), dropped * area))
    })?;
    let mut total = [0.0; K];
    let mut skipped = 0.0;
    for (s, k) in parts {
        for (a, b) in total.iter_mut().zip(s) {
            *a += b;
        }
        skipped += k;
    }
    let fraction = skipped / mesh.area();
    if fraction > max_skipped {
        return Err(HardyError::QuadratureBreakdown(fraction));
    }
    Ok((total, fraction))
}

fn nodal(mesh: &TriMesh, t: usize, u: &[f64], l: &[f64; 3]) -> f64 {
    let [a, b, c] = mesh.triangles[t];
    l[0] * u[a] + l[1] * u[b] + l[2] * u[c]
}

/// Value of a weighted-integral derivative and the dropped weight fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedDerivative {
    pub value: f64,
    pub skipped_fraction: f64,
}

/// `-2 int u^2 rho (x - sigma(x)) . (xi(x) - xi(sigma(x))) / d^4`, the
/// derivative of `t -> int u^2 rho / d_t^2` at the identity.
pub fn g_derivative(
    mesh: &TriMesh,
    sigma: &SigmaSet,
    u: &[f64],
    rho: &(dyn Fn(&Point) -> f64 + Sync),
    xi: &DeformationField,
    quad: &MassOptions,
    max_skipped: f64,
) -> Result<WeightedDerivative> {
    if u.len() != mesh.vertices.len() {
        return Err(HardyError::DimensionMismatch { expected: mesh.vertices.len(), got: u.len() });
    }
    let ([value], skipped_fraction) =
        integrate_singular(mesh, sigma, quad.degree, quad.split_depth, quad.parallel, max_skipped, |t, l, x, s| {
            let v = nodal(mesh, t, u, l);
            let d2 = s.distance * s.distance;
            let g = -2.0 * v * v * rho(x) / (d2 * d2);
            let shift = xi.value(x) - xi.value(&s.foot);
            ([g * (s.gradient * s.distance).dot(&shift)], g.abs() * s.distance * shift.norm())
        })?;
    Ok(WeightedDerivative { value, skipped_fraction })
}

/// Central differences and their extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdSample {
    pub t: f64,
    pub h: f64,
    pub criticality: Criticality,
    pub eigen_residual: f64,
    /// `R_0[u_t]`: base quotient of the transported minimiser.
    pub base_quotient_of_moved: f64,
    /// `R_t[u_0]`: moved quotient of the base minimiser.
    pub moved_quotient_of_base: f64,
}

impl FdSample {
    /// `R_t[u_t] - R_0[u_t] <= H_t - H_0 <= R_t[u_0] - R_0[u_0]`, to a relative slack.
    pub fn chain_holds(&self, h0: f64, slack: f64) -> bool {
        let lower = self.h - self.base_quotient_of_moved;
        let upper = self.moved_quotient_of_base - h0;
        let delta = self.h - h0;
        let tol = slack * h0;
        lower <= delta + tol && delta <= upper + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralDifference {
    pub step: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdReport {
    pub h0: f64,
    /// Grid in increasing `t`, including `t = 0`.
    pub samples: Vec<FdSample>,
    pub central: Vec<CentralDifference>,
    /// Richardson extrapolation of the two finest central differences.
    pub estimate: f64,
    /// `|estimate - finest central difference|`.
    pub step_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdOptions {
    pub steps: Vec<f64>,
    pub gate: GatePolicy,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { steps: vec![1e-3, 5e-4], gate: GatePolicy::Enforce }
    }
}

/// Solve on the image of the base mesh under `phi` (same connectivity).
pub fn solve_moved(disc: &Discretization, phi: &Diffeomorphism, solver: &SolverOptions) -> Result<(Discretization, HardySolution)> {
    let mesh = map_mesh(&disc.mesh, phi)?;
    let moved = Discretization::new(mesh, &disc.mass_options)?;
    let sol = moved.solve(solver)?;
    Ok((moved, sol))
}

fn solve_grid(
    disc: &Discretization,
    xi: &DeformationField,
    ts: &[f64],
    solver: &SolverOptions,
) -> Result<Vec<(Discretization, HardySolution)>> {
    ts.par_iter().map(|&t| solve_moved(disc, &Diffeomorphism::along(xi, t), solver)).collect()
}

/// Re-solves on `(id + t xi)` images of the base mesh for `t = +-steps`.
pub fn fd_oracle(
    disc: &Discretization,
    sol: &HardySolution,
    xi: &DeformationField,
    opts: &FdOptions,
    solver: &SolverOptions,
) -> Result<FdReport> {
    if opts.steps.is_empty() || opts.steps.iter().any(|t| !(*t > 0.0)) {
        return Err(HardyError::DegenerateInput("finite-difference steps must be positive".into()));
    }
    opts.gate.check(sol)?;
    let mut steps = opts.steps.clone();
    steps.sort_by(|a, b| b.total_cmp(a));
    let ts: Vec<f64> = steps.iter().flat_map(|&t| [t, -t]).collect();
    let solved = solve_grid(disc, xi, &ts, solver)?;
    let mut samples = vec![FdSample {
        t: 0.0,
        h: sol.h_value,
        criticality: sol.criticality,
        eigen_residual: sol.eigen_residual,
        base_quotient_of_moved: sol.h_value,
        moved_quotient_of_base: sol.h_value,
    }];
    for (&t, (moved, s)) in ts.iter().zip(&solved) {
        opts.gate.check(s)?;
        samples.push(FdSample {
            t,
            h: s.h_value,
            criticality: s.criticality,
            eigen_residual: s.eigen_residual,
            base_quotient_of_moved: disc.rayleigh(&s.minimiser),
            moved_quotient_of_base: moved.rayleigh(&sol.minimiser),
        });
    }
    let central: Vec<CentralDifference> = steps
        .iter()
        .enumerate()
        .map(|(k, &t)| CentralDifference { step: t, value: (solved[2 * k].1.h_value - solved[2 * k + 1].1.h_value) / (2.0 * t) })
        .collect();
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    let fine = central[central.len() - 1];
    let (estimate, step_error) = if central.len() >= 2 {
        let coarse = central[central.len() - 2];
        let q2 = (coarse.step / fine.step).powi(2);
        let r = (q2 * fine.value - coarse.value) / (q2 - 1.0);
        (r, (r - fine.value).abs())
    } else {
        (fine.value, f64::NAN)
    };
    Ok(FdReport { h0: sol.h_value, samples, central, estimate, step_error })
}

/// Analytic shape derivative with its two integrals and optional oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub derivative: f64,
    /// `int |grad v|^2 div xi - 2 (D xi) grad v . grad v`.
    pub stiffness_part: f64,
    /// `int v^2 / d^2 div xi - 2 v^2 (x - sigma) . (xi - xi(sigma)) / d^4`.
    pub mass_part: f64,
    pub h_value: f64,
    pub criticality: Criticality,
    pub gate_overridden: bool,
    pub skipped_fraction: f64,
    pub oracle: Option<FdReport>,
    /// `|derivative - oracle| / max(|oracle|, tiny)`.
    pub discrepancy: Option<f64>,
    pub extension: Option<ExtensionRecord>,
}

/// Parameters of the tube extension behind a boundary derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionRecord {
    pub width: f64,
    pub cutoff: String,
    pub profile: String,
}

impl SensitivityReport {
    pub fn attach_oracle(&mut self, fd: FdReport) {
        self.discrepancy = Some((self.derivative - fd.estimate).abs() / fd.estimate.abs().max(f64::MIN_POSITIVE));
        self.oracle = Some(fd);
    }
}

/// `D_id H(xi) = N'_0 - H D'_0` for the normalised minimiser.
pub fn shape_derivative(
    disc: &Discretization,
    sol: &HardySolution,
    xi: &DeformationField,
    opts: &DerivativeOptions,
) -> Result<SensitivityReport> {
    let gate_overridden = opts.gate.check(sol)?;
    if sol.normalization_residual > opts.normalization_tol {
        return Err(HardyError::NotNormalized(sol.normalization_residual));
    }
    let mesh = &disc.mesh;
    let v = &sol.minimiser;
    if v.len() != mesh.vertices.len() {
        return Err(HardyError::DimensionMismatch { expected: mesh.vertices.len(), got: v.len() });
    }
    let rule = TriRule::dunavant(disc.mass_options.degree);
    let parallel = disc.mass_options.parallel;
    let stiff = per_element(mesh.triangles.len(), parallel, |t| {
        let p = tri_points(mesh, t);
        let (g, area) = p1_gradients(&p).map_err(|_| HardyError::DegenerateElement(t))?;
        let tri = mesh.triangles[t];
        let grad = g[0] * v[tri[0]] + g[1] * v[tri[1]] + g[2] * v[tri[2]];
        let mut s = 0.0;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
            let j = xi.jacobian(&x);
            s += w * (grad.norm_squared() * j.trace() - 2.0 * grad.dot(&(j * grad)));
        }
        Ok(s * area)
    })?;
    let stiffness_part: f64 = stiff.iter().sum();
    let depth = disc.mass_options.split_depth + opts.extra_depth;
    let ([mass_part], skipped_fraction) = integrate_singular(
        mesh,
        &disc.sigma,
        disc.mass_options.degree,
        depth,
        parallel,
        opts.max_skipped,
        |t, l, x, s| {
            let u = nodal(mesh, t, v, l);
            let d2 = s.distance * s.distance;
            let w = u * u / d2;
            let div = w * xi.divergence(x);
            let shift = xi.value(x) - xi.value(&s.foot);
            let radial = 2.0 * w * (s.gradient * s.distance).dot(&shift) / d2;
            ([div - radial], div.abs() + 2.0 * w * shift.norm() / s.distance)
        },
    )?;
    Ok(SensitivityReport {
        derivative: stiffness_part - sol.h_value * mass_part,
        stiffness_part,
        mass_part,
        h_value: sol.h_value,
        criticality: sol.criticality,
        gate_overridden,
        skipped_fraction,
        oracle: None,
        discrepancy: None,
        extension: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    Euclidean,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuitySample {
    pub t: f64,
    pub deviation: f64,
    pub h: f64,
    pub delta_h: f64,
    /// `|delta_h| / (H deviation)`; absent when the deviation vanishes.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub mode: DistanceMode,
    pub h0: f64,
    pub samples: Vec<ContinuitySample>,
    pub sup_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Sampled sup of `|| D phi - I ||` over `co(Omega) u phi^-1(co(phi(Omega)))`.
pub fn deviation_on_hulls(phi: &Diffeomorphism, boundary: &[Point], grid: usize) -> Result<f64> {
    let hull = convex_hull(boundary)?;
    let mut dev = sample_points(&hull, grid).iter().map(|p| phi.deviation_at(p)).fold(0.0, f64::max);
    let image: Vec<Point> = boundary.iter().map(|p| phi.apply(p)).collect();
    for y in sample_points(&convex_hull(&image)?, grid) {
        dev = dev.max(phi.deviation_at(&phi.invert_apply(&y)?));
    }
    if dev >= 1.0 {
        return Err(HardyError::NotInvertible(dev));
    }
    Ok(dev)
}

/// Sampled sup of `|| D phi - I ||` over the domain bounded by `boundary`.
pub fn deviation_on_domain(phi: &Diffeomorphism, boundary: &[Point], grid: usize) -> Result<f64> {
    let domain = Domain::polygon(boundary.to_vec())?;
    let pts = sample_points(&domain, grid);
    let dev = pts.iter().map(|p| phi.deviation_at(p)).fold(0.0, f64::max);
    if dev >= 1.0 {
        return Err(HardyError::NotInvertible(dev));
    }
    Ok(dev)
}

/// Ratios `|H_t - H_0| / (H_0 || D phi_t - I ||)`. The deviation is taken over
/// the hull region for the Euclidean distance and over the domain alone when
/// the discretisation uses the interior distance.
pub fn continuity_ratio(
    disc: &Discretization,
    sol: &HardySolution,
    xi: &DeformationField,
    t_grid: &[f64],
    solver: &SolverOptions,
    grid: usize,
) -> Result<ContinuityReport> {
    let mode = if disc.mass_options.interior { DistanceMode::Interior } else { DistanceMode::Euclidean };
    let boundary = disc.mesh.boundary_polygon();
    let devs: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            let phi = Diffeomorphism::along(xi, t);
            match mode {
                DistanceMode::Euclidean => deviation_on_hulls(&phi, &boundary, grid),
                DistanceMode::Interior => deviation_on_domain(&phi, &boundary, grid),
            }
        })
        .collect::<Result<_>>()?;
    let solved = solve_grid(disc, xi, t_grid, solver)?;
    let h0 = sol.h_value;
    let samples: Vec<ContinuitySample> = t_grid
        .iter()
        .zip(devs)
        .zip(&solved)
        .map(|((&t, deviation), (_, s))| {
            let delta_h = s.h_value - h0;
            let ratio = (deviation > 0.0).then(|| delta_h.abs() / (h0 * deviation));
            ContinuitySample { t, deviation, h: s.h_value, delta_h, ratio }
        })
        .collect();
    let ratios: Vec<f64> = samples.iter().filter_map(|s| s.ratio).collect();
    let sup_ratio = ratios.iter().copied().reduce(f64::max);
    Ok(ContinuityReport { mode, h0, samples, sup_ratio, median_ratio: median(ratios) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilitySample {
    pub t: f64,
    pub h: f64,
    /// `|| u_t - u_0 ||_{H^1}` on the base mesh.
    pub distance: f64,
}

/// `H^1` distance between the base minimiser and the transported minimisers
/// of the moved problems, measured with the base stiffness plus the plain
/// `L^2` mass.
pub fn minimiser_stability(
    disc: &Discretization,
    sol: &HardySolution,
    xi: &DeformationField,
    t_grid: &[f64],
    solver: &SolverOptions,
) -> Result<Vec<StabilitySample>> {
    let unit = MassOptions { unit_weight: true, ..disc.mass_options };
    let l2 = assemble_hardy_mass(&disc.mesh, &disc.sigma, &unit)?;
    let u0 = disc.dofs.restrict(&sol.minimiser);
    let solved = solve_grid(disc, xi, t_grid, solver)?;
    Ok(t_grid
        .iter()
        .zip(&solved)
        .map(|(&t, (_, s))| {
            let mut ut = disc.dofs.restrict(&s.minimiser);
            if disc.mass.bilinear(&ut, &u0) < 0.0 {
                ut.iter_mut().for_each(|x| *x = -*x);
            }
            StabilitySample { t, h: s.h_value, distance: h1_distance(&disc.stiffness, &l2, &ut, &u0) }
        })
        .collect())
}

fn h1_distance(a: &SymmetricSparseForm, m: &SymmetricSparseForm, x: &[f64], y: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
    (a.bilinear(&w, &w) + m.bilinear(&w, &w)).max(0.0).sqrt()
}
