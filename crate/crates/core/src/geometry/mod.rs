//! Planar domains, boundary singular sets and distance fields.

mod curve;
mod distance;
mod hull;
pub mod index;
mod interior;

pub use curve::Curve;
pub use distance::{nearest_point_distance, DistanceSample, LocalSigma, SigmaSet};
pub use hull::{convex_hull, point_in_convex};
pub use interior::{interior_distance, InteriorDistance};

use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};
use index::SegmentIndex;

pub type Point = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Relative tolerance for on-boundary and tie tests, scaled by the domain diameter.
pub const GEO_REL_TOL: f64 = 1e-9;

/// Signed area of a closed polygon (positive when counterclockwise).
pub fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            a.x * b.y - a.y * b.x
        })
        .sum::<f64>()
        * 0.5
}

/// Even-odd point containment test for a closed polygon.
pub fn point_in_polygon(p: &Point, pts: &[Point]) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Curve samples backing a polygonal boundary.
#[derive(Debug, Clone)]
pub struct ParametricSource {
    pub curve: Curve,
    /// Curve parameter of each boundary vertex.
    pub params: Vec<f64>,
}

/// A bounded planar region enclosed by one simple closed curve.
#[derive(Debug, Clone)]
pub struct Domain {
    boundary: Vec<Point>,
    ccw: bool,
    source: Option<ParametricSource>,
}

impl Domain {
    /// Validates a closed boundary polygon against an expected orientation.
    pub fn new(boundary: Vec<Point>, ccw: bool) -> Result<Self> {
        let d = Self::polygon(boundary)?;
        if d.ccw != ccw {
            return Err(HardyError::InvalidDomain("vertex order does not match orientation flag".into()));
        }
        Ok(d)
    }

    /// Builds a domain from a closed polygon, inferring orientation.
    pub fn polygon(boundary: Vec<Point>) -> Result<Self> {
        if boundary.len() < 3 {
            return Err(HardyError::InvalidDomain(format!("{} vertices", boundary.len())));
        }
        if boundary.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(HardyError::InvalidDomain("non-finite vertex".into()));
        }
        let area = signed_area(&boundary);
        let d = Domain { ccw: area > 0.0, boundary, source: None };
        if area.abs() <= 0.0 {
            return Err(HardyError::InvalidDomain("zero enclosed area".into()));
        }
        if !d.is_simple() {
            return Err(HardyError::InvalidDomain("boundary self-intersects".into()));
        }
        Ok(d)
    }

    /// Samples a closed curve at `n` equispaced parameters starting at `phase`.
    pub fn from_curve(curve: Curve, n: usize, phase: f64) -> Result<Self> {
        let period = curve.period();
        let params: Vec<f64> = (0..n).map(|k| phase + period * k as f64 / n as f64).collect();
        let pts = params.iter().map(|&t| curve.point(t)).collect();
        let mut d = Self::polygon(pts)?;
        d.source = Some(ParametricSource { curve, params });
        Ok(d)
    }

    pub fn unit_square() -> Self {
        Self::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    pub fn rectangle(lo: Point, hi: Point) -> Self {
        let pts = vec![lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)];
        Self::polygon(pts).expect("axis-aligned rectangle is valid")
    }

    /// L-shaped domain `[0,2]^2 \ (1,2]^2` scaled by `size / 2`.
    pub fn l_shape(size: f64) -> Self {
        let s = size / 2.0;
        let pts = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]
            .iter()
            .map(|&(x, y)| Point::new(x * s, y * s))
            .collect();
        Self::polygon(pts).expect("L-shape is valid")
    }

    pub fn disk(center: Point, radius: f64, n: usize) -> Self {
        Self::from_curve(Curve::Circle { center, radius }, n, 0.0).expect("circle sampling is valid")
    }

    pub fn ellipse(center: Point, a: f64, b: f64, n: usize) -> Self {
        Self::from_curve(Curve::Ellipse { center, a, b, rotation: 0.0 }, n, 0.0).expect("ellipse sampling is valid")
    }

    pub fn boundary(&self) -> &[Point] {
        &self.boundary
    }

    pub fn is_ccw(&self) -> bool {
        self.ccw
    }

    pub fn source(&self) -> Option<&ParametricSource> {
        self.source.as_ref()
    }

    pub(crate) fn with_source(mut self, source: Option<ParametricSource>) -> Self {
        self.source = source;
        self
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.boundary).abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|[a, b]| (b - a).norm()).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = [Point; 2]> + '_ {
        let n = self.boundary.len();
        (0..n).map(move |i| [self.boundary[i], self.boundary[(i + 1) % n]])
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in &self.boundary {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Absolute geometric tolerance `GEO_REL_TOL * diameter`.
    pub fn tol(&self) -> f64 {
        GEO_REL_TOL * self.diameter()
    }

    pub fn contains(&self, p: &Point) -> bool {
        point_in_polygon(p, &self.boundary)
    }

    pub fn segment_index(&self) -> SegmentIndex {
        SegmentIndex::new(self.edges().collect())
    }

    /// Distance from `p` to the boundary polygon.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        self.edges()
            .map(|[a, b]| (index::closest_on_segment(p, &a, &b).0 - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Cumulative arclength of each vertex along the boundary, starting at vertex 0.
    pub fn vertex_arclength(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.boundary.len());
        for [a, b] in self.edges() {
            out.push(acc);
            acc += (b - a).norm();
        }
        out
    }

    /// Point at normalised boundary parameter `u` in `[0, 1)`.
    pub fn point_at_fraction(&self, u: f64) -> Point {
        let total = self.perimeter();
        let target = u.rem_euclid(1.0) * total;
        let mut acc = 0.0;
        for [a, b] in self.edges() {
            let l = (b - a).norm();
            if acc + l >= target {
                return a + (b - a) * ((target - acc) / l);
            }
            acc += l;
        }
        self.boundary[0]
    }

    /// Normalised boundary parameter of the point of the polygon closest to `p`.
    pub fn fraction_of(&self, p: &Point) -> f64 {
        let total = self.perimeter();
        let mut acc = 0.0;
        let mut best = (f64::INFINITY, 0.0);
        for [a, b] in self.edges() {
            let l = (b - a).norm();
            let (foot, t) = index::closest_on_segment(p, &a, &b);
            let d = (foot - p).norm();
            if d < best.0 {
                best = (d, (acc + t * l) / total);
            }
            acc += l;
        }
        best.1
    }

    /// True when `p` lies on the boundary polygon or on the parametric source curve.
    pub fn on_boundary(&self, p: &Point) -> bool {
        let tol = self.tol();
        if self.boundary_distance(p) <= tol {
            return true;
        }
        self.source.as_ref().is_some_and(|s| s.curve.distance(p) <= tol)
    }

    fn is_simple(&self) -> bool {
        let n = self.boundary.len();
        let idx = self.segment_index();
        let tol = 0.0;
        for i in 0..n {
            let [a, b] = [self.boundary[i], self.boundary[(i + 1) % n]];
            if (b - a).norm() == 0.0 {
                return false;
            }
            for j in idx.crossings(&a, &b, tol) {
                let adjacent = j == i || j == (i + 1) % n || (j + 1) % n == i;
                if !adjacent {
                    return false;
                }
            }
        }
        true
    }

    /// Reach estimate: half the smallest local curvature radius along the
    /// boundary, measured on the parametric source when present.
    pub fn reach_estimate(&self) -> f64 {
        if let Some(src) = &self.source {
            if let Some(r) = src.curve.min_curvature_radius() {
                return 0.5 * r;
            }
        }
        // polygon: circumradius through consecutive vertex triples
        let n = self.boundary.len();
        let mut rmin = f64::INFINITY;
        for i in 0..n {
            let a = self.boundary[(i + n - 1) % n];
            let b = self.boundary[i];
            let c = self.boundary[(i + 1) % n];
            let cross = ((b - a).x * (c - b).y - (b - a).y * (c - b).x).abs();
            if cross > 0.0 {
                let r = (b - a).norm() * (c - b).norm() * (c - a).norm() / (2.0 * cross);
                rmin = rmin.min(r);
            }
        }
        0.5 * rmin
    }
}

/// Which part of the boundary carries the singular weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Submanifold {
    /// Finitely many boundary points (`s = 0`).
    PointSet { points: Vec<[f64; 2]> },
    /// The whole boundary (`s = 1`).
    FullBoundary,
    /// Closed boundary arc between two normalised boundary parameters,
    /// traversed in increasing direction. Admitted for continuity experiments only.
    Arc { start: f64, end: f64 },
}

impl Submanifold {
    pub fn point(p: Point) -> Self {
        Submanifold::PointSet { points: vec![[p.x, p.y]] }
    }

    pub fn dimension(&self) -> u32 {
        match self {
            Submanifold::PointSet { .. } => 0,
            Submanifold::FullBoundary | Submanifold::Arc { .. } => 1,
        }
    }

    /// Arcs have endpoints and are not closed submanifolds.
    pub fn continuity_only(&self) -> bool {
        matches!(self, Submanifold::Arc { .. })
    }

    pub fn points(&self) -> Vec<Point> {
        match self {
            Submanifold::PointSet { points } => points.iter().map(|p| Point::new(p[0], p[1])).collect(),
            _ => Vec::new(),
        }
    }

    /// `(n - s)^2 / 4` in the plane.
    pub fn critical_value(&self) -> f64 {
        let c = 2.0 - self.dimension() as f64;
        c * c / 4.0
    }

    /// Checks non-emptiness and that points lie on the boundary.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        match self {
            Submanifold::PointSet { points } => {
                if points.is_empty() {
                    return Err(HardyError::EmptySubmanifold);
                }
                for p in self.points() {
                    if !domain.on_boundary(&p) {
                        return Err(HardyError::PointOutsideDomain(p.x, p.y));
                    }
                }
                Ok(())
            }
            Submanifold::FullBoundary => Ok(()),
            Submanifold::Arc { start, end } => {
                if !(start.is_finite() && end.is_finite()) || (end - start).abs() <= 0.0 {
                    return Err(HardyError::EmptySubmanifold);
                }
                Ok(())
            }
        }
    }
}

/// Whether the normalised parameter `u` lies on the arc `[start, end]` (mod 1).
pub fn arc_contains(start: f64, end: f64, u: f64, tol: f64) -> bool {
    let len = (end - start).rem_euclid(1.0);
    let len = if len == 0.0 { 1.0 } else { len };
    let off = (u - start).rem_euclid(1.0);
    off <= len + tol || off >= 1.0 - tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_basics() {
        let d = Domain::unit_square();
        assert!(d.is_ccw());
        assert!((d.area() - 1.0).abs() < 1e-15);
        assert!((d.perimeter() - 4.0).abs() < 1e-15);
        assert!(d.contains(&Point::new(0.5, 0.5)));
        assert!(!d.contains(&Point::new(1.5, 0.5)));
    }

    #[test]
    fn rejects_bowtie() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(matches!(Domain::polygon(pts), Err(HardyError::InvalidDomain(_))));
    }

    #[test]
    fn orientation_flag_checked() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)];
        assert!(Domain::new(pts.clone(), true).is_err());
        assert!(!Domain::new(pts, false).unwrap().is_ccw());
    }

    #[test]
    fn submanifold_validation() {
        let d = Domain::unit_square();
        assert!(Submanifold::point(Point::new(0.5, 0.0)).validate(&d).is_ok());
        assert_eq!(
            Submanifold::PointSet { points: vec![] }.validate(&d),
            Err(HardyError::EmptySubmanifold)
        );
        assert!(Submanifold::point(Point::new(0.5, 0.5)).validate(&d).is_err());
        assert_eq!(Submanifold::FullBoundary.dimension(), 1);
        assert!(Submanifold::Arc { start: 0.1, end: 0.2 }.continuity_only());
    }

    #[test]
    fn disk_points_on_curve_accepted() {
        let d = Domain::disk(Point::zeros(), 1.0, 64);
        let p = Point::new((0.01f64).cos(), (0.01f64).sin());
        assert!(d.on_boundary(&p));
    }

    #[test]
    fn arc_membership_wraps() {
        assert!(arc_contains(0.9, 0.1, 0.95, 0.0));
        assert!(arc_contains(0.9, 0.1, 0.05, 0.0));
        assert!(!arc_contains(0.9, 0.1, 0.5, 0.0));
    }
}
