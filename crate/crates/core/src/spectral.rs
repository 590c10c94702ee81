//! P1 discretisation of the Hardy quotient and its smallest eigenpair.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};
use crate::geometry::{InteriorDistance, Point, SigmaSet};
use crate::mesh::TriMesh;
use crate::quadrature::{SplitQuadrature, Touch};

/// Symmetric sparse matrix in compressed rows with merged duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparseForm {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricSparseForm {
    pub fn from_triplets(dim: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in t {
            if (i, j) == last {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = (i, j);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymmetricSparseForm { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k])))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        r.binary_search(&j).map_or(0.0, |k| self.vals[self.row_ptr[i] + k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum())
            .collect()
    }

    /// `x^T M y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// Largest `|m_ij - m_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max) / scale
    }

    pub fn scaled(&self, c: f64) -> Self {
        SymmetricSparseForm { vals: self.vals.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<Triplet<usize, usize, f64>> = self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.dim, self.dim, &t).expect("valid triplets")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Free (interior) vertices numbered consecutively; boundary vertices carry `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub dof: Vec<Option<usize>>,
    pub vertex: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &TriMesh) -> Self {
        let bnd = mesh.boundary_flags();
        let mut dof = vec![None; mesh.vertices.len()];
        let mut vertex = Vec::new();
        for (v, b) in bnd.iter().enumerate() {
            if !b {
                dof[v] = Some(vertex.len());
                vertex.push(v);
            }
        }
        DofMap { dof, vertex }
    }

    pub fn len(&self) -> usize {
        self.vertex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex.is_empty()
    }

    /// Vertex values with zeros on the boundary.
    pub fn expand(&self, x: &[f64], n_vertices: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_vertices];
        for (k, &v) in self.vertex.iter().enumerate() {
            out[v] = x[k];
        }
        out
    }

    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.vertex.iter().map(|&v| u[v]).collect()
    }
}

/// Gradients of the three hat functions and the element area.
pub fn p1_gradients(p: &[Point; 3]) -> Result<([Point; 3], f64)> {
    let [a, b, c] = *p;
    let det = (b - a).x * (c - a).y - (b - a).y * (c - a).x;
    if !(det > 0.0) {
        return Err(HardyError::DegenerateElement(0));
    }
    let rot = |v: Point| Point::new(v.y, -v.x) / det;
    Ok(([rot(c - b), rot(a - c), rot(b - a)], 0.5 * det))
}

/// Element stiffness matrix `area * grad phi_i . grad phi_j`.
pub fn element_stiffness(p: &[Point; 3]) -> Result<[[f64; 3]; 3]> {
    let (g, area) = p1_gradients(p)?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| area * g[i].dot(&g[j]))))
}

fn scatter(mesh: &TriMesh, dofs: &DofMap, locals: &[[[f64; 3]; 3]]) -> SymmetricSparseForm {
    let mut t = Vec::with_capacity(9 * locals.len());
    for (tri, m) in mesh.triangles.iter().zip(locals) {
        for i in 0..3 {
            let Some(a) = dofs.dof[tri[i]] else { continue };
            for j in 0..3 {
                if let Some(b) = dofs.dof[tri[j]] {
                    t.push((a, b, m[i][j]));
                }
            }
        }
    }
    SymmetricSparseForm::from_triplets(dofs.len(), t)
}

pub(crate) fn tri_points(mesh: &TriMesh, t: usize) -> [Point; 3] {
    mesh.triangles[t].map(|k| mesh.vertices[k])
}

/// Stiffness form restricted to the free vertices.
pub fn assemble_stiffness(mesh: &TriMesh) -> Result<SymmetricSparseForm> {
    let locals = stiffness_locals(mesh)?;
    Ok(scatter(mesh, &DofMap::new(mesh), &locals))
}

fn stiffness_locals(mesh: &TriMesh) -> Result<Vec<[[f64; 3]; 3]>> {
    (0..mesh.triangles.len())
        .map(|t| element_stiffness(&tri_points(mesh, t)).map_err(|_| HardyError::DegenerateElement(t)))
        .collect()
}

/// Quadrature and weight options for the singular mass form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MassOptions {
    pub degree: u32,
    pub split_depth: u32,
    /// Replace `1 / d^2` by one (area check).
    pub unit_weight: bool,
    /// Measure distance inside the domain instead of in the plane.
    pub interior: bool,
    pub parallel: bool,
}

impl Default for MassOptions {
    fn default() -> Self {
        MassOptions { degree: 4, split_depth: 6, unit_weight: false, interior: false, parallel: true }
    }
}

/// Per-element touch patterns toward the singular set.
pub fn touch_patterns(mesh: &TriMesh) -> Vec<Touch> {
    let flags = mesh.sigma_flags();
    let edges = mesh.sigma_edges();
    mesh.triangles
        .iter()
        .map(|t| Touch {
            vertices: t.map(|v| flags[v]),
            edges: std::array::from_fn(|i| {
                let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                edges.binary_search(&(a.min(b), a.max(b))).is_ok()
            }),
        })
        .collect()
}

/// Vertex used as the local origin for quadrature nodes: the first one on the singular set.
pub(crate) fn anchor(touch: &Touch) -> usize {
    touch.vertices.iter().position(|&v| v).unwrap_or(0)
}

/// `x - p[k]` for the node with barycentric coordinates `l`, accurate when the node is close to `p[k]`.
pub(crate) fn node_offset(p: &[Point; 3], k: usize, l: &[f64; 3]) -> Point {
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    (p[i] - p[k]) * l[i] + (p[j] - p[k]) * l[j]
}

/// Maps `f` over elements, in parallel when asked; results stay in element order.
pub(crate) fn per_element<T: Send>(n: usize, parallel: bool, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Weighted mass form `int phi_i phi_j / d^2` restricted to the free vertices.
pub fn assemble_hardy_mass(mesh: &TriMesh, sigma: &SigmaSet, opts: &MassOptions) -> Result<SymmetricSparseForm> {
    let dofs = DofMap::new(mesh);
    let locals = mass_locals(mesh, sigma, opts)?;
    Ok(scatter(mesh, &dofs, &locals))
}

fn mass_locals(mesh: &TriMesh, sigma: &SigmaSet, opts: &MassOptions) -> Result<Vec<[[f64; 3]; 3]>> {
    let quad = SplitQuadrature::new(opts.degree, opts.split_depth);
    let touch = touch_patterns(mesh);
    let field = if opts.interior && !opts.unit_weight { Some(InteriorDistance::compute(mesh, sigma)?) } else { None };
    per_element(mesh.triangles.len(), opts.parallel, |t| {
        let p = tri_points(mesh, t);
        let area = mesh.signed_area(t);
        let k = anchor(&touch[t]);
        let local = touch[t].any().then(|| sigma.local(&mesh.centroid(t), mesh.element_diameter(t)).relative_to(&p[k]));
        let mut m = [[0.0; 3]; 3];
        for (l, w) in quad.nodes(&touch[t]) {
            let weight = if opts.unit_weight {
                1.0
            } else {
                let offset = node_offset(&p, k, l);
                let d = match (&field, &local) {
                    (Some(f), _) => f.at(mesh, t, &(p[k] + offset), sigma),
                    (None, Some(local)) => local.distance(&offset),
                    (None, None) => sigma.distance(&(p[k] + offset)),
                };
                if d <= 0.0 {
                    return Err(HardyError::SingularNode(t));
                }
                1.0 / (d * d)
            };
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += w * area * weight * l[i] * l[j];
                }
            }
        }
        Ok(m)
    })
}

/// `u^T A u / u^T B u`.
pub fn rayleigh_quotient(a: &SymmetricSparseForm, b: &SymmetricSparseForm, u: &[f64]) -> f64 {
    a.bilinear(u, u) / b.bilinear(u, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    NearCritical,
}

/// Eigensolver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol: f64,
    /// Krylov subspace size per restart cycle.
    pub krylov: usize,
    pub max_restarts: usize,
    /// Relative margin below the critical value for the criticality gate.
    pub margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, krylov: 30, max_restarts: 60, margin: 0.05 }
    }
}

/// Smallest eigenpair of a definite pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// Normalised so that `v^T B v = 1`.
    pub vector: Vec<f64>,
    pub residual: f64,
    /// Relative distance to the next Ritz value.
    pub gap: f64,
    pub iterations: usize,
}

/// Shift-invert Lanczos (shift 0) in the `B` inner product with full
/// reorthogonalisation and explicit restarts from the current Ritz vector.
pub fn solve_smallest(a: &SymmetricSparseForm, b: &SymmetricSparseForm, opts: &SolverOptions) -> Result<Eigenpair> {
    let n = a.dim();
    if n == 0 || b.dim() != n {
        return Err(HardyError::DimensionMismatch { expected: n, got: b.dim() });
    }
    let llt = a.to_faer().sp_cholesky(Side::Lower).map_err(|_| HardyError::IndefiniteForm)?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        llt.solve_in_place(m.as_mut());
        (0..n).map(|i| m[(i, 0)]).collect()
    };
    let bnorm = |x: &[f64]| -> Result<f64> {
        let q = b.bilinear(x, x);
        if q <= 0.0 {
            return Err(HardyError::IndefiniteForm);
        }
        Ok(q.sqrt())
    };
    let mut x = vec![1.0; n];
    let mut iterations = 0;
    let mut best = (f64::INFINITY, 0.0, x.clone(), 0.0);
    for _ in 0..=opts.max_restarts {
        let s = bnorm(&x)?;
        let mut basis: Vec<Vec<f64>> = vec![x.iter().map(|v| v / s).collect()];
        let mut bbasis: Vec<Vec<f64>> = vec![b.matvec(&basis[0])];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let m = opts.krylov.min(n).max(1);
        for j in 0..m {
            iterations += 1;
            let mut w = solve(&bbasis[j]);
            let aj = dot(&w, &bbasis[j]);
            alpha.push(aj);
            // two passes of Gram-Schmidt in the B inner product
            for _ in 0..2 {
                for (q, bq) in basis.iter().zip(&bbasis) {
                    let c = dot(&w, bq);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let bw = b.matvec(&w);
            let nb = dot(&w, &bw).max(0.0).sqrt();
            if j + 1 == m || nb <= 1e-14 * aj.abs() {
                break;
            }
            beta.push(nb);
            basis.push(w.iter().map(|v| v / nb).collect());
            bbasis.push(bw.iter().map(|v| v / nb).collect());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let top = order[0];
        let theta = eig.eigenvalues[top];
        if !(theta > 0.0) {
            return Err(HardyError::IndefiniteForm);
        }
        let mut v = vec![0.0; n];
        for (i, q) in basis.iter().enumerate().take(k) {
            let c = eig.eigenvectors[(i, top)];
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi += c * qi;
            }
        }
        let s = bnorm(&v)?;
        v.iter_mut().for_each(|x| *x /= s);
        let lambda = rayleigh_quotient(a, b, &v);
        let av = a.matvec(&v);
        let bv = b.matvec(&v);
        let r: Vec<f64> = av.iter().zip(&bv).map(|(p, q)| p - lambda * q).collect();
        let residual = norm(&r) / norm(&bv);
        let gap = if k > 1 { (1.0 / eig.eigenvalues[order[1]] - lambda) / lambda } else { f64::INFINITY };
        if residual < best.0 {
            best = (residual, lambda, v.clone(), gap);
        }
        if residual <= opts.tol {
            break;
        }
        x = v;
    }
    let (residual, value, vector, gap) = best;
    if residual > opts.tol {
        return Err(HardyError::NoConvergence { iterations, residual });
    }
    if gap < 1e-8 {
        log::warn!("spectral gap {gap:e} below 1e-8; smallest eigenvalue may not be simple");
    }
    Ok(Eigenpair { value, vector, residual, gap, iterations })
}

/// Discrete Hardy constant and its normalised minimiser.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardySolution {
    pub h_value: f64,
    /// Minimiser at every mesh vertex, zero on the boundary.
    pub minimiser: Vec<f64>,
    pub normalization_residual: f64,
    pub criticality: Criticality,
    pub critical_value: f64,
    pub eigen_residual: f64,
    pub spectral_gap: f64,
    pub iterations: usize,
    /// `min(v) / max(v)` over the free vertices.
    pub min_ratio: f64,
    pub vertices: usize,
    pub triangles: usize,
    pub sigma_dimension: u32,
}

impl HardySolution {
    pub fn is_subcritical(&self) -> bool {
        self.criticality == Criticality::Subcritical
    }

    /// Fails with `CriticalityGate` unless subcritical.
    pub fn gate(&self) -> Result<()> {
        if self.is_subcritical() {
            Ok(())
        } else {
            Err(HardyError::CriticalityGate { h: self.h_value, critical: self.critical_value })
        }
    }
}

/// Threads used by the sparse factorisation: `None` runs sequentially.
pub fn set_factorization_threads(threads: Option<usize>) {
    faer::set_global_parallelism(match threads {
        Some(n) if n > 1 => faer::Par::rayon(n),
        _ => faer::Par::Seq,
    });
}

/// `(n - s)^2 / 4` for `n = 2`.
pub fn critical_value(sigma_dimension: u32) -> f64 {
    let c = 2.0 - f64::from(sigma_dimension);
    c * c / 4.0
}

pub fn classify(h: f64, critical: f64, margin: f64) -> Criticality {
    if h > critical * (1.0 - margin) {
        Criticality::NearCritical
    } else {
        Criticality::Subcritical
    }
}

/// Mesh, singular set and both assembled forms.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: TriMesh,
    pub sigma: SigmaSet,
    pub dofs: DofMap,
    pub stiffness: SymmetricSparseForm,
    pub mass: SymmetricSparseForm,
    pub mass_options: MassOptions,
}

impl Discretization {
    pub fn new(mesh: TriMesh, mass_options: &MassOptions) -> Result<Self> {
        let sigma = mesh.sigma_set()?;
        Self::with_sigma(mesh, sigma, mass_options)
    }

    pub fn with_sigma(mesh: TriMesh, sigma: SigmaSet, mass_options: &MassOptions) -> Result<Self> {
        let dofs = DofMap::new(&mesh);
        if dofs.is_empty() {
            return Err(HardyError::DegenerateInput("mesh has no interior vertices".into()));
        }
        let stiffness = scatter(&mesh, &dofs, &stiffness_locals(&mesh)?);
        let mass = scatter(&mesh, &dofs, &mass_locals(&mesh, &sigma, mass_options)?);
        Ok(Discretization { mesh, sigma, dofs, stiffness, mass, mass_options: *mass_options })
    }

    /// Rayleigh quotient of a vertex vector.
    pub fn rayleigh(&self, u: &[f64]) -> f64 {
        let x = self.dofs.restrict(u);
        rayleigh_quotient(&self.stiffness, &self.mass, &x)
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<HardySolution> {
        let eig = solve_smallest(&self.stiffness, &self.mass, opts)?;
        let mut v = eig.vector;
        let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
        if mean < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let normalization_residual = (self.mass.bilinear(&v, &v) - 1.0).abs();
        let critical = critical_value(self.mesh.sigma_dimension);
        let h = rayleigh_quotient(&self.stiffness, &self.mass, &v);
        Ok(HardySolution {
            h_value: h,
            minimiser: self.dofs.expand(&v, self.mesh.vertices.len()),
            normalization_residual,
            criticality: classify(h, critical, opts.margin),
            critical_value: critical,
            eigen_residual: eig.residual,
            spectral_gap: eig.gap,
            iterations: eig.iterations,
            min_ratio: min / max,
            vertices: self.mesh.vertices.len(),
            triangles: self.mesh.triangles.len(),
            sigma_dimension: self.mesh.sigma_dimension,
        })
    }
}

/// Decay exponent `alpha = (s - n + sqrt((n - s)^2 - 4H)) / 2` with `n = 2`.
pub fn alpha_exponent(h: f64, n: u32, s: u32) -> Result<f64> {
    let c = f64::from(n) - f64::from(s);
    let disc = c * c - 4.0 * h;
    if disc < 0.0 {
        return Err(HardyError::Supercritical { h, critical: c * c / 4.0 });
    }
    Ok((-c + disc.sqrt()) / 2.0)
}

/// Samples used by [`decay_exponent_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayWindow {
    pub r_min: f64,
    pub r_max: f64,
    /// Half-angle in degrees of the cone around the inward direction at the singular point.
    pub cone_deg: f64,
}

/// Inward bisector direction at a boundary vertex.
fn inward_direction(mesh: &TriMesh, v: usize) -> Point {
    let n = mesh.boundary_edges.len();
    let i = mesh.boundary_edges.iter().position(|e| e.b == v).expect("vertex on the boundary loop");
    let (prev, next) = (mesh.boundary_edges[i], mesh.boundary_edges[(i + 1) % n]);
    let p = mesh.vertices[v];
    let a = (mesh.vertices[prev.a] - p).normalize();
    let b = (mesh.vertices[next.b] - p).normalize();
    // interior lies counterclockwise from b to a
    let cross = b.x * a.y - b.y * a.x;
    let bis = a + b;
    if bis.norm() < 1e-12 {
        Point::new(-b.y, b.x)
    } else if cross >= 0.0 {
        bis.normalize()
    } else {
        -bis.normalize()
    }
}

/// Least-squares slope of `log v` against `log d` over samples `(d, v)`.
pub fn fit_slope(samples: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples.iter().filter(|(d, v)| *d > 0.0 && *v > 0.0).map(|(d, v)| (d.ln(), v.ln())).collect();
    if pts.len() < 5 {
        return Err(HardyError::InsufficientSamples(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(HardyError::InsufficientSamples(pts.len()));
    }
    Ok(sxy / sxx)
}

/// Slope of `log v` against `log d_Sigma` over interior vertices within the
/// window, restricted to a cone around the inward direction at point singularities.
pub fn decay_exponent_fit(mesh: &TriMesh, values: &[f64], sigma: &SigmaSet, window: &DecayWindow) -> Result<f64> {
    let bnd = mesh.boundary_flags();
    let cos_cone = window.cone_deg.to_radians().cos();
    let axes: Vec<(Point, Point)> =
        mesh.sigma_points.iter().map(|&v| (mesh.vertices[v], inward_direction(mesh, v))).collect();
    let mut samples = Vec::new();
    for (v, p) in mesh.vertices.iter().enumerate() {
        if bnd[v] {
            continue;
        }
        let s = sigma.nearest(p);
        if !s.unique || s.distance < window.r_min || s.distance > window.r_max {
            continue;
        }
        let in_cone = axes.is_empty()
            || axes.iter().any(|(c, dir)| (p - c).norm() > 0.0 && (p - c).normalize().dot(dir) >= cos_cone);
        if in_cone {
            samples.push((s.distance, values[v]));
        }
    }
    fit_slope(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, Submanifold};
    use crate::mesh::triangulate;

    #[test]
    fn reference_element() {
        let k = element_stiffness(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-15);
            }
            assert!(k[i].iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn identical_pencil_gives_one() {
        let m = triangulate(&Domain::unit_square(), &Submanifold::FullBoundary, 0.3, 0.0).unwrap();
        let a = assemble_stiffness(&m).unwrap();
        let e = solve_smallest(&a, &a, &SolverOptions::default()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert!(e.residual < 1e-12);
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_exponent(0.0, 2, 0).unwrap(), 0.0);
        assert!((alpha_exponent(0.75, 2, 0).unwrap() + 0.5).abs() < 1e-15);
        assert!((alpha_exponent(0.25, 2, 1).unwrap() + 0.5).abs() < 1e-15);
        assert!(matches!(alpha_exponent(0.3, 2, 1), Err(HardyError::Supercritical { .. })));
    }

    #[test]
    fn slope_of_power_law() {
        let s: Vec<(f64, f64)> = (1..50).map(|k| (1e-3 * k as f64, (1e-3 * k as f64).powf(0.7))).collect();
        assert!((fit_slope(&s).unwrap() - 0.7).abs() < 1e-12);
        assert!(matches!(fit_slope(&s[..3]), Err(HardyError::InsufficientSamples(3))));
    }

    #[test]
    fn criticality_margin() {
        assert_eq!(classify(0.24, 0.25, 0.05), Criticality::NearCritical);
        assert_eq!(classify(0.2, 0.25, 0.05), Criticality::Subcritical);
    }
}
