use serde::Serialize;

use super::index::{closest_on_segment, SegmentIndex};
use super::{arc_contains, Domain, Point, Submanifold};
use crate::error::{HardyError, Result};

/// Distance from a point to the singular set, with the foot and gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceSample {
    pub distance: f64,
    pub foot: Point,
    /// `(x - foot) / distance`; zero on the set itself.
    pub gradient: Point,
    /// False when a second foot is equidistant within the geometric tolerance.
    pub unique: bool,
    /// Normalised boundary parameter of the foot (used to break ties).
    pub foot_param: f64,
}

/// Resolved geometry of a singular set: isolated points plus polyline pieces.
#[derive(Debug, Clone)]
pub struct SigmaSet {
    points: Vec<Point>,
    point_params: Vec<f64>,
    segments: SegmentIndex,
    /// Boundary parameter at the segment start and its parameter increment.
    segment_params: Vec<(f64, f64)>,
    tol: f64,
    dimension: u32,
}

impl SigmaSet {
    pub fn new(
        points: Vec<Point>,
        point_params: Vec<f64>,
        segments: Vec<[Point; 2]>,
        segment_params: Vec<(f64, f64)>,
        tol: f64,
        dimension: u32,
    ) -> Result<Self> {
        if points.is_empty() && segments.is_empty() {
            return Err(HardyError::EmptySubmanifold);
        }
        assert_eq!(points.len(), point_params.len());
        assert_eq!(segments.len(), segment_params.len());
        Ok(SigmaSet { points, point_params, segments: SegmentIndex::new(segments), segment_params, tol, dimension })
    }

    /// Resolves `sigma` against the boundary polygon of `domain`.
    pub fn from_domain(domain: &Domain, sigma: &Submanifold) -> Result<Self> {
        sigma.validate(domain)?;
        let tol = domain.tol();
        let total = domain.perimeter();
        let arc = domain.vertex_arclength();
        let edges: Vec<[Point; 2]> = domain.edges().collect();
        let edge_param = |i: usize| {
            let l = (edges[i][1] - edges[i][0]).norm();
            (arc[i] / total, l / total)
        };
        match sigma {
            Submanifold::PointSet { .. } => {
                let pts = sigma.points();
                let params = pts.iter().map(|p| domain.fraction_of(p)).collect();
                Self::new(pts, params, Vec::new(), Vec::new(), tol, 0)
            }
            Submanifold::FullBoundary => {
                let params = (0..edges.len()).map(edge_param).collect();
                Self::new(Vec::new(), Vec::new(), edges, params, tol, 1)
            }
            Submanifold::Arc { start, end } => {
                let mut segs = Vec::new();
                let mut params = Vec::new();
                for (i, e) in edges.iter().enumerate() {
                    let (u0, du) = edge_param(i);
                    // clip the edge to the arc in parameter space
                    let samples = [0.0, 1.0];
                    let inside: Vec<bool> =
                        samples.iter().map(|&f| arc_contains(*start, *end, u0 + f * du, 0.0)).collect();
                    let mut lo = 0.0f64;
                    let mut hi = 1.0f64;
                    if !inside[0] || !inside[1] {
                        let rel = |u: f64| ((u - u0).rem_euclid(1.0)) / du;
                        let (fs, fe) = (rel(*start), rel(*end));
                        match (inside[0], inside[1]) {
                            (false, false) => {
                                if fs < 1.0 && fe < 1.0 && fs < fe {
                                    lo = fs;
                                    hi = fe;
                                } else {
                                    continue;
                                }
                            }
                            (true, false) => hi = fe.min(1.0),
                            (false, true) => lo = fs.min(1.0),
                            _ => {}
                        }
                    }
                    if hi <= lo {
                        continue;
                    }
                    let d = e[1] - e[0];
                    segs.push([e[0] + d * lo, e[0] + d * hi]);
                    params.push(((u0 + lo * du).rem_euclid(1.0), (hi - lo) * du));
                }
                Self::new(Vec::new(), Vec::new(), segs, params, tol, 1)
            }
        }
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segment(&self, i: usize) -> &[Point; 2] {
        self.segments.segment(i)
    }

    /// Image of the set under a point map, keeping boundary parameters.
    pub fn mapped(&self, f: impl Fn(&Point) -> Point) -> SigmaSet {
        let segs = (0..self.segments.len())
            .map(|i| {
                let [a, b] = self.segments.segment(i);
                [f(a), f(b)]
            })
            .collect();
        SigmaSet {
            points: self.points.iter().map(&f).collect(),
            point_params: self.point_params.clone(),
            segments: SegmentIndex::new(segs),
            segment_params: self.segment_params.clone(),
            tol: self.tol,
            dimension: self.dimension,
        }
    }

    /// Euclidean distance only.
    pub fn distance(&self, x: &Point) -> f64 {
        let dp = self.points.iter().map(|p| (p - x).norm()).fold(f64::INFINITY, f64::min);
        dp.min(self.segments.distance(x))
    }

    /// Nearest point, tie detection and tie-breaking by smallest boundary parameter.
    pub fn nearest(&self, x: &Point) -> DistanceSample {
        let mut cands: Vec<(f64, Point, f64)> = Vec::new();
        for (p, &u) in self.points.iter().zip(&self.point_params) {
            cands.push(((p - x).norm(), *p, u));
        }
        for h in self.segments.near(x, self.tol) {
            let (u0, du) = self.segment_params[h.segment];
            cands.push((h.distance, h.foot, (u0 + h.fraction * du).rem_euclid(1.0)));
        }
        pick(x, cands, self.tol)
    }

    /// How much farther the nearest competing foot is than the nearest one;
    /// small values mean `x` is close to the set where the foot jumps.
    pub fn foot_gap(&self, x: &Point) -> f64 {
        let best = self.nearest(x);
        let mut gap = f64::INFINITY;
        let far = |foot: &Point| (foot - best.foot).norm() > self.tol;
        for p in &self.points {
            if far(p) {
                gap = gap.min((p - x).norm() - best.distance);
            }
        }
        for h in self.segments.near(x, best.distance.max(self.tol)) {
            // feet at a shared segment end belong to the same corner, not a competitor
            if far(&h.foot) && h.fraction > 0.0 && h.fraction < 1.0 {
                gap = gap.min(h.distance - best.distance);
            }
        }
        gap.max(0.0)
    }

    /// The features that can be nearest for some point within `radius` of `center`.
    pub fn local(&self, center: &Point, radius: f64) -> LocalSigma {
        let d = self.distance(center);
        let reach = d + 2.0 * radius + self.tol;
        let points = self
            .points
            .iter()
            .zip(&self.point_params)
            .filter(|(p, _)| (*p - center).norm() <= reach)
            .map(|(p, &u)| (*p, u))
            .collect();
        let segments = self
            .segments
            .near(center, 2.0 * radius + self.tol)
            .into_iter()
            .map(|h| (*self.segments.segment(h.segment), self.segment_params[h.segment]))
            .collect();
        LocalSigma { points, segments, tol: self.tol, origin: Point::zeros() }
    }
}

/// Candidate subset of a [`SigmaSet`] valid inside a small region.
#[derive(Debug, Clone)]
pub struct LocalSigma {
    points: Vec<(Point, f64)>,
    segments: Vec<([Point; 2], (f64, f64))>,
    tol: f64,
    origin: Point,
}

impl LocalSigma {
    /// The same features stored as offsets from `origin`. Queries then take
    /// offsets too, which keeps small distances accurate far from zero; feet
    /// are still reported in absolute coordinates.
    pub fn relative_to(&self, origin: &Point) -> LocalSigma {
        let o = self.origin + origin;
        LocalSigma {
            points: self.points.iter().map(|(p, u)| (p + self.origin - o, *u)).collect(),
            segments: self.segments.iter().map(|([a, b], u)| ([a + self.origin - o, b + self.origin - o], *u)).collect(),
            tol: self.tol,
            origin: o,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> + '_ {
        self.points.iter().map(|(p, _)| p)
    }

    pub fn segments(&self) -> impl Iterator<Item = &[Point; 2]> + '_ {
        self.segments.iter().map(|(s, _)| s)
    }

    /// Same value as `nearest(x).distance`, without building candidates.
    pub fn distance(&self, x: &Point) -> f64 {
        let dp = self.points.iter().map(|(p, _)| (p - x).norm()).fold(f64::INFINITY, f64::min);
        self.segments.iter().map(|([a, b], _)| (closest_on_segment(x, a, b).0 - x).norm()).fold(dp, f64::min)
    }

    pub fn nearest(&self, x: &Point) -> DistanceSample {
        let mut cands: Vec<(f64, Point, f64)> = Vec::with_capacity(self.points.len() + self.segments.len());
        for (p, u) in &self.points {
            cands.push(((p - x).norm(), *p, *u));
        }
        for ([a, b], (u0, du)) in &self.segments {
            let (foot, t) = closest_on_segment(x, a, b);
            cands.push(((foot - x).norm(), foot, (u0 + t * du).rem_euclid(1.0)));
        }
        let mut s = pick(x, cands, self.tol);
        s.foot += self.origin;
        s
    }

    /// Every distinct foot within tolerance of the nearest distance, each as its own sample.
    pub fn ties(&self, x: &Point) -> Vec<DistanceSample> {
        let best = self.nearest(x);
        let mut feet: Vec<(Point, f64)> = Vec::new();
        let mut add = |foot: Point, u: f64| {
            if (x - foot).norm() <= best.distance + self.tol && feet.iter().all(|(f, _)| (f - foot).norm() > self.tol) {
                feet.push((foot, u));
            }
        };
        for (p, u) in &self.points {
            add(*p, *u);
        }
        for ([a, b], (u0, du)) in &self.segments {
            let (foot, t) = closest_on_segment(x, a, b);
            add(foot, (u0 + t * du).rem_euclid(1.0));
        }
        let unique = feet.len() <= 1;
        feet.into_iter()
            .map(|(foot, foot_param)| {
                let distance = (x - foot).norm();
                let gradient = if distance > 0.0 { (x - foot) / distance } else { Point::zeros() };
                DistanceSample { distance, foot: foot + self.origin, gradient, unique, foot_param }
            })
            .collect()
    }
}

fn pick(x: &Point, mut cands: Vec<(f64, Point, f64)>, tol: f64) -> DistanceSample {
    let best = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    cands.retain(|c| c.0 <= best + tol);
    cands.sort_by(|a, b| a.2.total_cmp(&b.2));
    let unique = cands.iter().all(|c| (c.1 - cands[0].1).norm() <= tol);
    // the distance is the true minimum even when the foot is picked by parameter
    let (_, foot, foot_param) = if unique {
        *cands.iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty")
    } else {
        cands[0]
    };
    let distance = best;
    let gradient = if distance > 0.0 { (x - foot) / distance } else { Point::zeros() };
    DistanceSample { distance, foot, gradient, unique, foot_param }
}

/// Nearest point on `sigma` to `x` for a domain-level singular set.
///
/// With `strict` set, `x` must lie in the closed domain.
pub fn nearest_point_distance(x: &Point, domain: &Domain, sigma: &Submanifold, strict: bool) -> Result<DistanceSample> {
    if strict && !(domain.contains(x) || domain.boundary_distance(x) <= domain.tol()) {
        return Err(HardyError::PointOutsideDomain(x.x, x.y));
    }
    Ok(SigmaSet::from_domain(domain, sigma)?.nearest(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let d = Domain::unit_square();
        let s = nearest_point_distance(&Point::new(0.0, 0.5), &d, &Submanifold::point(Point::new(1.0, 0.5)), false).unwrap();
        assert!((s.distance - 1.0).abs() < 1e-15);
        assert_eq!(s.foot, Point::new(1.0, 0.5));
        assert!((s.gradient - Point::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(s.unique);
    }

    #[test]
    fn center_of_square_is_a_tie() {
        let d = Domain::unit_square();
        let s = nearest_point_distance(&Point::new(0.5, 0.5), &d, &Submanifold::FullBoundary, true).unwrap();
        assert!((s.distance - 0.5).abs() < 1e-15);
        assert!(!s.unique);
        // smallest boundary parameter wins: bottom edge
        assert!((s.foot - Point::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn corner_foot_shared_by_two_edges_is_unique() {
        let d = Domain::unit_square();
        // outside the square near the corner: both edges give the same vertex foot
        let s = nearest_point_distance(&Point::new(1.2, 1.1), &d, &Submanifold::FullBoundary, false).unwrap();
        assert!(s.unique);
        assert!((s.foot - Point::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn strict_containment() {
        let d = Domain::unit_square();
        let r = nearest_point_distance(&Point::new(2.0, 0.5), &d, &Submanifold::FullBoundary, true);
        assert!(matches!(r, Err(HardyError::PointOutsideDomain(..))));
    }

    #[test]
    fn arc_clipping() {
        let d = Domain::unit_square();
        // bottom edge middle half: parameters 0.0625..0.1875 of perimeter 4
        let sigma = Submanifold::Arc { start: 0.0625, end: 0.1875 };
        let set = SigmaSet::from_domain(&d, &sigma).unwrap();
        assert_eq!(set.segment_count(), 1);
        let [a, b] = set.segment(0);
        assert!((a - Point::new(0.25, 0.0)).norm() < 1e-12);
        assert!((b - Point::new(0.75, 0.0)).norm() < 1e-12);
        let s = set.nearest(&Point::new(0.0, 0.1));
        assert!((s.foot - Point::new(0.25, 0.0)).norm() < 1e-12);
    }
}
