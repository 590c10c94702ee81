//! Static bounding-volume hierarchy over line segments.
//!
//! Used for nearest-point queries against polyline singular sets and for
//! segment/boundary crossing tests.

use super::Point;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point,
    max: Point,
}

impl Aabb {
    fn of_segment(a: &Point, b: &Point) -> Self {
        Aabb {
            min: Point::new(a.x.min(b.x), a.y.min(b.y)),
            max: Point::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: Point::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Point::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    fn dist2(&self, p: &Point) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx * dx + dy * dy
    }

    fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }
}

#[derive(Debug, Clone)]
enum Node {
    /// Range into the tree-ordered arrays.
    Leaf { bbox: Aabb, start: usize, end: usize },
    Inner { bbox: Aabb, left: usize, right: usize },
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => bbox,
        }
    }
}

const LEAF_SIZE: usize = 4;

/// Closest point on segment `[a, b]` to `p`, with the segment fraction.
pub fn closest_on_segment(p: &Point, a: &Point, b: &Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// A candidate foot returned by [`SegmentIndex::near`].
#[derive(Debug, Clone, Copy)]
pub struct SegmentHit {
    pub segment: usize,
    pub foot: Point,
    pub fraction: f64,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentIndex {
    segments: Vec<[Point; 2]>,
    nodes: Vec<Node>,
    /// Segment indices in leaf order, and the segments themselves in that order.
    order: Vec<usize>,
    ordered: Vec<[Point; 2]>,
}

impl SegmentIndex {
    pub fn new(segments: Vec<[Point; 2]>) -> Self {
        let mut idx = SegmentIndex { segments, nodes: Vec::new(), order: Vec::new(), ordered: Vec::new() };
        if !idx.segments.is_empty() {
            let items: Vec<usize> = (0..idx.segments.len()).collect();
            idx.build(items);
            idx.ordered = idx.order.iter().map(|&i| idx.segments[i]).collect();
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segment(&self, i: usize) -> &[Point; 2] {
        &self.segments[i]
    }

    fn build(&mut self, items: Vec<usize>) -> usize {
        let bbox = items
            .iter()
            .map(|&i| Aabb::of_segment(&self.segments[i][0], &self.segments[i][1]))
            .reduce(|a, b| a.union(&b))
            .expect("non-empty item list");
        if items.len() <= LEAF_SIZE {
            let start = self.order.len();
            self.order.extend(items);
            self.nodes.push(Node::Leaf { bbox, start, end: self.order.len() });
            return self.nodes.len() - 1;
        }
        let ext = bbox.max - bbox.min;
        let axis = if ext.x >= ext.y { 0 } else { 1 };
        let mut items = items;
        let key = |i: &usize| {
            let s = &self.segments[*i];
            0.5 * (s[0][axis] + s[1][axis])
        };
        items.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
        let right_items = items.split_off(items.len() / 2);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { bbox, start: 0, end: 0 });
        let left = self.build(items);
        let right = self.build(right_items);
        self.nodes[slot] = Node::Inner { bbox, left, right };
        slot
    }

    /// All segments whose distance to `p` is within `slack` of the minimum,
    /// sorted by distance then segment index. Empty only when the index is.
    pub fn near(&self, p: &Point, slack: f64) -> Vec<SegmentHit> {
        if self.nodes.is_empty() {
            return Vec::new();
        }
        let mut best = f64::INFINITY;
        let mut hits: Vec<SegmentHit> = Vec::new();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let bound = best + slack;
            if self.nodes[n].bbox().dist2(p) > bound * bound {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for k in *start..*end {
                        let (i, [a, b]) = (self.order[k], &self.ordered[k]);
                        let (foot, fraction) = closest_on_segment(p, a, b);
                        let distance = (p - foot).norm();
                        if distance <= best + slack {
                            best = best.min(distance);
                            hits.push(SegmentHit { segment: i, foot, fraction, distance });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bbox().dist2(p);
                    let dr = self.nodes[*right].bbox().dist2(p);
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        hits.retain(|h| h.distance <= best + slack);
        hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.segment.cmp(&b.segment)));
        hits
    }

    /// Distance from `p` to the nearest segment.
    pub fn distance(&self, p: &Point) -> f64 {
        self.distance_below(p, f64::INFINITY)
    }

    /// `min(bound, distance(p))`; a tight `bound` prunes most of the tree.
    pub fn distance_below(&self, p: &Point, bound: f64) -> f64 {
        let mut best = bound;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = [0usize; 128];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let n = stack[top];
            if self.nodes[n].bbox().dist2(p) > best * best {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for [a, b] in &self.ordered[*start..*end] {
                        best = best.min((p - closest_on_segment(p, a, b).0).norm());
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bbox().dist2(p);
                    let dr = self.nodes[*right].bbox().dist2(p);
                    let (near, far) = if dl <= dr { (*left, *right) } else { (*right, *left) };
                    stack[top] = far;
                    stack[top + 1] = near;
                    top += 2;
                }
            }
        }
        best
    }

    pub fn segment_distance(&self, i: usize, p: &Point) -> f64 {
        let [a, b] = &self.segments[i];
        (p - closest_on_segment(p, a, b).0).norm()
    }

    /// Indices of segments that properly intersect the open segment `(a, b)`.
    /// Touching at an endpoint of `(a, b)` is not reported.
    pub fn crossings(&self, a: &Point, b: &Point, tol: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let q = Aabb::of_segment(a, b);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            if !self.nodes[n].bbox().overlaps(&q) {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for k in *start..*end {
                        let (i, [c, d]) = (self.order[k], &self.ordered[k]);
                        if segments_cross(a, b, c, d, tol) {
                            out.push(i);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

/// True when the segment `ab` meets `cd` at a point that is not within `tol`
/// of `a` or `b`.
pub fn segments_cross(a: &Point, b: &Point, c: &Point, d: &Point, tol: f64) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    let touches_end = |p: &Point| (p - a).norm() <= tol || (p - b).norm() <= tol;
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        // proper crossing; find the point and exclude endpoint touches
        let ab = b - a;
        let cd = d - c;
        let den = ab.x * cd.y - ab.y * cd.x;
        let t = ((c.x - a.x) * cd.y - (c.y - a.y) * cd.x) / den;
        let x = a + ab * t;
        return !touches_end(&x);
    }
    // collinear or touching cases
    let on = |p: &Point, q: &Point, r: &Point| {
        let (cl, _) = closest_on_segment(r, p, q);
        (cl - r).norm() <= tol
    };
    // an endpoint of cd inside ab blocks it; an endpoint of ab on cd is a touch
    [c, d].into_iter().any(|r| on(a, b, r) && !touches_end(r))
}
