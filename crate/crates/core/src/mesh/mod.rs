//! Graded conforming triangulations and their transport under maps.

mod cdt;
mod io;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::deform::Diffeomorphism;
use crate::error::{HardyError, Result};
use crate::geometry::{arc_contains, Curve, Domain, Point, SigmaSet, Submanifold};
use cdt::{BoundaryGeom, Cdt, Seg};

/// Size law `h * (max(d, floor) / radius)^beta` inside the graded radius, `h` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradingSpec {
    pub h: f64,
    pub beta: f64,
    pub radius: f64,
    pub floor: f64,
}

impl GradingSpec {
    /// Floor where the size law meets the distance itself (`beta < 1`),
    /// never below `1e-6 * diameter`.
    pub fn new(h: f64, beta: f64, radius: f64, diameter: f64) -> Self {
        let min = 1e-6 * diameter;
        let floor = if beta > 0.0 && beta < 1.0 {
            (h * radius.powf(-beta)).powf(1.0 / (1.0 - beta)).max(min)
        } else {
            min
        };
        GradingSpec { h, beta, radius, floor }
    }

    pub fn size(&self, d: f64) -> f64 {
        if self.beta == 0.0 || d >= self.radius {
            self.h
        } else {
            self.h * (d.max(self.floor) / self.radius).powf(self.beta)
        }
    }
}

/// Grading exponent used when none is given: 1 for points, 1/2 for curves.
pub fn default_beta(sigma: &Submanifold) -> f64 {
    if sigma.dimension() == 0 {
        1.0
    } else {
        0.5
    }
}

/// Mesh generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshOptions {
    pub h: f64,
    /// Grading exponent; `None` picks [`default_beta`].
    pub beta: Option<f64>,
    /// Graded region radius; `None` means the domain diameter.
    pub radius: Option<f64>,
    pub min_angle: f64,
    pub max_vertices: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions { h: 0.1, beta: None, radius: None, min_angle: 20.0, max_vertices: 3_000_000 }
    }
}

/// One boundary edge, oriented with the domain on its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub on_sigma: bool,
}

/// Conforming triangulation with boundary loop and singular-set markers.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// The boundary loop in order.
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Vertices that carry point singularities.
    pub sigma_points: Vec<usize>,
    pub sigma_dimension: u32,
    pub grading: Option<GradingSpec>,
}

impl TriMesh {
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|k| self.vertices[k]);
        0.5 * ((b - a).x * (c - a).y - (b - a).y * (c - a).x)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn element_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|k| self.vertices[k]);
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|k| self.vertices[k]);
        (a + b + c) / 3.0
    }

    pub fn diameter(&self) -> f64 {
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }

    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            f[e.a] = true;
            f[e.b] = true;
        }
        f
    }

    /// Vertices lying on the singular set.
    pub fn sigma_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.vertices.len()];
        for &v in &self.sigma_points {
            f[v] = true;
        }
        for e in self.boundary_edges.iter().filter(|e| e.on_sigma) {
            f[e.a] = true;
            f[e.b] = true;
        }
        f
    }

    /// Undirected edges lying on the singular set, as sorted pairs.
    pub fn sigma_edges(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> =
            self.boundary_edges.iter().filter(|e| e.on_sigma).map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
        v.sort_unstable();
        v
    }

    pub fn boundary_segments(&self) -> Vec<[Point; 2]> {
        self.boundary_edges.iter().map(|e| [self.vertices[e.a], self.vertices[e.b]]).collect()
    }

    /// Cumulative boundary arclength fraction at the start of each loop edge.
    fn loop_fractions(&self) -> Vec<f64> {
        let lens: Vec<f64> =
            self.boundary_edges.iter().map(|e| (self.vertices[e.b] - self.vertices[e.a]).norm()).collect();
        let total: f64 = lens.iter().sum();
        let mut acc = 0.0;
        lens.iter()
            .map(|l| {
                let u = acc / total;
                acc += l;
                u
            })
            .collect()
    }

    /// Boundary vertex positions in loop order.
    pub fn boundary_polygon(&self) -> Vec<Point> {
        self.boundary_edges.iter().map(|e| self.vertices[e.a]).collect()
    }

    /// Copy with the whole boundary loop marked as the singular set.
    pub fn with_boundary_sigma(&self) -> TriMesh {
        let mut m = self.clone();
        m.boundary_edges.iter_mut().for_each(|e| e.on_sigma = true);
        m.sigma_points.clear();
        m.sigma_dimension = 1;
        m
    }

    /// Singular set resolved on the mesh geometry.
    pub fn sigma_set(&self) -> Result<SigmaSet> {
        let frac = self.loop_fractions();
        let total: f64 = self.boundary_segments().iter().map(|[a, b]| (b - a).norm()).sum();
        let pos: HashMap<usize, f64> = self.boundary_edges.iter().zip(&frac).map(|(e, &u)| (e.a, u)).collect();
        let points: Vec<Point> = self.sigma_points.iter().map(|&v| self.vertices[v]).collect();
        let params = self.sigma_points.iter().map(|v| pos.get(v).copied().unwrap_or(0.0)).collect();
        let mut segs = Vec::new();
        let mut seg_params = Vec::new();
        for (e, &u) in self.boundary_edges.iter().zip(&frac) {
            if e.on_sigma {
                let (a, b) = (self.vertices[e.a], self.vertices[e.b]);
                segs.push([a, b]);
                seg_params.push((u, (b - a).norm() / total));
            }
        }
        SigmaSet::new(points, params, segs, seg_params, 1e-9 * self.diameter(), self.sigma_dimension)
    }

    /// Sorted vertex adjacency lists.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for t in &self.triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    pub fn nearest_vertex(&self, x: &Point) -> usize {
        (0..self.vertices.len())
            .min_by(|&a, &b| (self.vertices[a] - x).norm_squared().total_cmp(&(self.vertices[b] - x).norm_squared()))
            .expect("mesh has vertices")
    }

    /// Undirected edge multiplicities.
    fn edge_counts(&self) -> BTreeMap<(usize, usize), (usize, usize)> {
        // (count in a->b orientation with a < b, count reversed)
        let mut m = BTreeMap::new();
        for t in &self.triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let e = m.entry((a.min(b), a.max(b))).or_insert((0, 0));
                if a < b {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        m
    }

    pub fn edge_count(&self) -> usize {
        self.edge_counts().len()
    }

    /// `V - E + F`; one for a triangulated disk.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Checks orientation, conformity and the boundary loop.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if self.signed_area(t) <= 0.0 {
                return Err(HardyError::DegenerateElement(t));
            }
        }
        let counts = self.edge_counts();
        let mut boundary = Vec::new();
        for (&(a, b), &(f, r)) in &counts {
            if f > 1 || r > 1 {
                return Err(HardyError::DegenerateInput(format!("edge ({a}, {b}) is not conforming")));
            }
            if f + r == 1 {
                boundary.push((a, b));
            }
        }
        let mut loop_edges: Vec<(usize, usize)> =
            self.boundary_edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
        loop_edges.sort_unstable();
        if loop_edges != boundary {
            return Err(HardyError::DegenerateInput("boundary markers do not match the free edges".into()));
        }
        let n = self.boundary_edges.len();
        for i in 0..n {
            if self.boundary_edges[i].b != self.boundary_edges[(i + 1) % n].a {
                return Err(HardyError::DegenerateInput("boundary edges do not form a loop".into()));
            }
        }
        Ok(())
    }

    /// Same connectivity with vertices moved by `f` (no checks).
    pub fn transformed(&self, f: impl Fn(&Point) -> Point) -> TriMesh {
        TriMesh { vertices: self.vertices.iter().map(f).collect(), ..self.clone() }
    }
}

/// Image mesh under `phi` with the same connectivity.
pub fn map_mesh(mesh: &TriMesh, phi: &Diffeomorphism) -> Result<TriMesh> {
    let mut dev: f64 = 0.0;
    for p in mesh.vertices.iter().chain((0..mesh.triangles.len()).map(|t| mesh.centroid(t)).collect::<Vec<_>>().iter()) {
        dev = dev.max(phi.deviation_at(p));
    }
    if dev >= 1.0 {
        return Err(HardyError::NotInvertible(dev));
    }
    let out = mesh.transformed(|p| phi.apply(p));
    if let Some(t) = (0..out.triangles.len()).find(|&t| out.signed_area(t) <= 0.0) {
        return Err(HardyError::ElementInversion(t));
    }
    Ok(out)
}

enum PieceGeom {
    Line(Point, Point),
    Curve,
}

struct Geom<'a> {
    pieces: Vec<PieceGeom>,
    curve: Option<&'a Curve>,
}

impl BoundaryGeom for Geom<'_> {
    fn point(&self, piece: usize, t: f64) -> Point {
        match self.pieces[piece] {
            PieceGeom::Line(a, b) => a + (b - a) * t,
            PieceGeom::Curve => self.curve.expect("curve piece has a curve").point(t),
        }
    }
}

struct Span {
    piece: usize,
    ta: f64,
    tb: f64,
    sigma: bool,
}

fn spans<'a>(domain: &'a Domain, sigma: &Submanifold) -> (Geom<'a>, Vec<Span>) {
    let tol = domain.tol();
    let mut cut_points: Vec<Point> = sigma.points();
    if let Submanifold::Arc { start, end } = sigma {
        cut_points.push(domain.point_at_fraction(*start));
        cut_points.push(domain.point_at_fraction(*end));
    }
    let on_sigma = |mid: &Point| match sigma {
        Submanifold::FullBoundary => true,
        Submanifold::PointSet { .. } => false,
        Submanifold::Arc { start, end } => arc_contains(*start, *end, domain.fraction_of(mid), 0.0),
    };
    if let Some(src) = domain.source() {
        let curve = &src.curve;
        let period = curve.period();
        let mut cuts: Vec<f64> = cut_points.iter().map(|p| curve.project(p)).collect();
        if cuts.is_empty() {
            cuts.push(src.params[0].rem_euclid(period));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * period);
        let n = cuts.len();
        let spans = (0..n)
            .map(|i| {
                let ta = cuts[i];
                let tb = if i + 1 < n { cuts[i + 1] } else { cuts[0] + period };
                let mid = curve.point(0.5 * (ta + tb));
                Span { piece: 0, ta, tb, sigma: on_sigma(&mid) }
            })
            .collect();
        return (Geom { pieces: vec![PieceGeom::Curve], curve: Some(curve) }, spans);
    }
    let mut pieces = Vec::new();
    let mut out = Vec::new();
    for (i, [a, b]) in domain.edges().enumerate() {
        pieces.push(PieceGeom::Line(a, b));
        let len2 = (b - a).norm_squared();
        let mut cuts = vec![0.0, 1.0];
        for p in &cut_points {
            let t = (p - a).dot(&(b - a)) / len2;
            let foot = a + (b - a) * t;
            if (foot - p).norm() <= tol && t * len2.sqrt() > tol && (1.0 - t) * len2.sqrt() > tol {
                cuts.push(t);
            }
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let mid = a + (b - a) * (0.5 * (w[0] + w[1]));
            out.push(Span { piece: i, ta: w[0], tb: w[1], sigma: on_sigma(&mid) });
        }
    }
    (Geom { pieces, curve: None }, out)
}

/// Parameters along `[ta, tb]` with spacing following `size`.
fn sample_span(pos: &dyn Fn(f64) -> Point, ta: f64, tb: f64, size: &dyn Fn(&Point) -> f64, min_n: usize) -> Vec<f64> {
    fn rec(
        pos: &dyn Fn(f64) -> Point,
        size: &dyn Fn(&Point) -> f64,
        t0: f64,
        t1: f64,
        p0: Point,
        p1: Point,
        depth: u32,
        out: &mut Vec<(f64, f64)>,
    ) {
        let tm = 0.5 * (t0 + t1);
        let pm = pos(tm);
        let inc = (pm - p0).norm() / size(&((p0 + pm) * 0.5)) + (p1 - pm).norm() / size(&((pm + p1) * 0.5));
        if depth < 64 && inc > 0.1 {
            rec(pos, size, t0, tm, p0, pm, depth + 1, out);
            rec(pos, size, tm, t1, pm, p1, depth + 1, out);
        } else {
            out.push((t1, inc));
        }
    }
    let coarse = 64;
    let mut fine = vec![(ta, 0.0)];
    for k in 0..coarse {
        let t0 = ta + (tb - ta) * k as f64 / coarse as f64;
        let t1 = ta + (tb - ta) * (k + 1) as f64 / coarse as f64;
        rec(pos, size, t0, t1, pos(t0), pos(t1), 0, &mut fine);
    }
    let mut cum = Vec::with_capacity(fine.len());
    let mut acc = 0.0;
    for &(t, inc) in &fine {
        acc += inc;
        cum.push((t, acc));
    }
    let n = (acc.round() as usize).max(min_n);
    let mut out = vec![ta];
    let mut j = 1;
    for k in 1..n {
        let target = acc * k as f64 / n as f64;
        while cum[j].1 < target {
            j += 1;
        }
        let (t0, c0) = cum[j - 1];
        let (t1, c1) = cum[j];
        out.push(t0 + (t1 - t0) * (target - c0) / (c1 - c0));
    }
    out.push(tb);
    out
}

/// Distance field used only for sizing: dense boundary samples for curved domains.
fn sizing_sigma(domain: &Domain, sigma: &Submanifold) -> Result<SigmaSet> {
    match (domain.source(), sigma) {
        (Some(src), Submanifold::FullBoundary) => {
            let n = 4096;
            let p = src.curve.period();
            let pts: Vec<Point> = (0..n).map(|k| src.curve.point(p * k as f64 / n as f64)).collect();
            let segs: Vec<[Point; 2]> = (0..n).map(|k| [pts[k], pts[(k + 1) % n]]).collect();
            let params = (0..n).map(|k| (k as f64 / n as f64, 1.0 / n as f64)).collect();
            SigmaSet::new(Vec::new(), Vec::new(), segs, params, domain.tol(), 1)
        }
        _ => SigmaSet::from_domain(domain, sigma),
    }
}

/// Graded mesh with default options apart from `h` and `beta`.
pub fn triangulate(domain: &Domain, sigma: &Submanifold, h: f64, beta: f64) -> Result<TriMesh> {
    triangulate_with(domain, sigma, &MeshOptions { h, beta: Some(beta), ..MeshOptions::default() })
}

pub fn triangulate_with(domain: &Domain, sigma: &Submanifold, opts: &MeshOptions) -> Result<TriMesh> {
    sigma.validate(domain)?;
    let h = opts.h;
    let beta = opts.beta.unwrap_or_else(|| default_beta(sigma));
    if !(h > 0.0) || !(0.0..=2.0).contains(&beta) {
        return Err(HardyError::DegenerateInput(format!("mesh size {h} / grading exponent {beta}")));
    }
    let diam = domain.diameter();
    let grading = GradingSpec::new(h, beta, opts.radius.unwrap_or(diam), diam);
    let sizing = sizing_sigma(domain, sigma)?;
    let size = |p: &Point| grading.size(sizing.distance(p));
    let (geom, spans) = spans(domain, sigma);
    let closed = spans.len() == 1;
    // boundary loop samples: (point, piece, param, sigma flag of the following segment)
    let mut samples: Vec<(Point, usize, f64, f64, bool)> = Vec::new();
    for s in &spans {
        let pos = |t: f64| geom.point(s.piece, t);
        let len = (pos(s.tb) - pos(s.ta)).norm().max((pos(0.5 * (s.ta + s.tb)) - pos(s.ta)).norm());
        if len < 1e-3 * h {
            return Err(HardyError::GeometryTooThin { feature: len, size: h });
        }
        let ts = sample_span(&pos, s.ta, s.tb, &size, if closed { 8 } else { 1 });
        for w in ts.windows(2) {
            samples.push((pos(w[0]), s.piece, w[0], w[1], s.sigma));
        }
    }
    let mut lo = Point::repeat(f64::INFINITY);
    let mut hi = Point::repeat(f64::NEG_INFINITY);
    for s in &samples {
        lo = lo.inf(&s.0);
        hi = hi.sup(&s.0);
    }
    let mut cdt = Cdt::new(lo, hi);
    let mut ids = Vec::with_capacity(samples.len());
    for s in &samples {
        let v = cdt.insert(s.0);
        if ids.contains(&v) {
            return Err(HardyError::GeometryTooThin { feature: 0.0, size: h });
        }
        ids.push(v);
    }
    let n = samples.len();
    let mut extra = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let seg = Seg { from: ids[i], to: ids[(i + 1) % n], piece: s.1, t0: s.2, t1: s.3, sigma: s.4 };
        cdt.enforce(seg, &geom, &mut extra)?;
    }
    cdt.flood();
    cdt.refine(&geom, &size, opts.min_angle, opts.max_vertices)?;
    let (tris, segs) = cdt.finish();
    let mut remap = vec![usize::MAX; cdt.pts.len()];
    let mut vertices = Vec::new();
    let mut used: Vec<usize> = tris.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    for v in used {
        remap[v] = vertices.len();
        vertices.push(cdt.pts[v]);
    }
    let triangles: Vec<[usize; 3]> = tris.iter().map(|t| t.map(|v| remap[v])).collect();
    let by_from: HashMap<usize, &Seg> = segs.iter().map(|s| (s.from, s)).collect();
    let start = ids[0];
    let mut boundary_edges = Vec::with_capacity(segs.len());
    let mut v = start;
    loop {
        let s = by_from[&v];
        boundary_edges.push(BoundaryEdge { a: remap[s.from], b: remap[s.to], on_sigma: s.sigma });
        v = s.to;
        if v == start {
            break;
        }
    }
    let mut mesh = TriMesh {
        vertices,
        triangles,
        boundary_edges,
        sigma_points: Vec::new(),
        sigma_dimension: sigma.dimension(),
        grading: Some(grading),
    };
    let flags = mesh.boundary_flags();
    for p in sigma.points() {
        let v = (0..mesh.vertices.len())
            .filter(|&v| flags[v])
            .min_by(|&a, &b| (mesh.vertices[a] - p).norm().total_cmp(&(mesh.vertices[b] - p).norm()))
            .expect("boundary has vertices");
        if (mesh.vertices[v] - p).norm() > 1e-6 * diam {
            return Err(HardyError::PointOutsideDomain(p.x, p.y));
        }
        mesh.vertices[v] = p;
        mesh.sigma_points.push(v);
    }
    mesh.validate()?;
    Ok(mesh)
}
