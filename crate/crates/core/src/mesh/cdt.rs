//! Incremental constrained Delaunay triangulation with Lawson flips and
//! Ruppert refinement. Boundary subsegments carry a curve parameter range so
//! that splits land on the true boundary curve.

use std::collections::{HashMap, VecDeque};

use robust::{incircle, orient2d, Coord};

use crate::error::{HardyError, Result};
use crate::geometry::Point;

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    /// `n[i]` is the neighbour across the edge opposite `v[i]`.
    n: [usize; 3],
    inside: bool,
}

/// Boundary subsegment oriented along the boundary loop.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Seg {
    pub from: usize,
    pub to: usize,
    pub piece: usize,
    pub t0: f64,
    pub t1: f64,
    pub sigma: bool,
}

/// Evaluates boundary pieces at a parameter.
pub(crate) trait BoundaryGeom {
    fn point(&self, piece: usize, t: f64) -> Point;
}

enum Loc {
    Tri(usize),
    Edge(usize, usize),
    Vertex(usize),
}

enum Walk {
    Found(usize),
    Blocked(usize, usize),
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn co(p: &Point) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

pub(crate) fn circumcenter(a: &Point, b: &Point, c: &Point) -> Point {
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    let (b2, c2) = (bx * bx + by * by, cx * cx + cy * cy);
    Point::new(a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d)
}

pub(crate) struct Cdt {
    pub pts: Vec<Point>,
    tris: Vec<Tri>,
    vert_tri: Vec<usize>,
    segs: HashMap<(usize, usize), Seg>,
    pub next: Vec<usize>,
    pub prev: Vec<usize>,
    last: usize,
}

impl Cdt {
    /// Empty triangulation covered by a large super-triangle (vertices 0..3).
    pub fn new(lo: Point, hi: Point) -> Self {
        let c = (lo + hi) * 0.5;
        let r = (hi - lo).norm().max(1e-300) * 100.0;
        let pts = vec![
            c + Point::new(-2.0 * r, -r),
            c + Point::new(2.0 * r, -r),
            c + Point::new(0.0, 2.0 * r),
        ];
        Cdt {
            pts,
            tris: vec![Tri { v: [0, 1, 2], n: [NONE; 3], inside: false }],
            vert_tri: vec![0; 3],
            segs: HashMap::new(),
            next: vec![NONE; 3],
            prev: vec![NONE; 3],
            last: 0,
        }
    }

    fn orient(&self, a: usize, b: usize, p: &Point) -> f64 {
        orient2d(co(&self.pts[a]), co(&self.pts[b]), co(p))
    }

    fn idx(&self, t: usize, v: usize) -> usize {
        let tv = self.tris[t].v;
        (0..3).find(|&i| tv[i] == v).expect("vertex belongs to triangle")
    }

    fn replace_neighbor(&mut self, t: usize, old: usize, new: usize) {
        if t == NONE {
            return;
        }
        for k in 0..3 {
            if self.tris[t].n[k] == old {
                self.tris[t].n[k] = new;
                return;
            }
        }
    }

    fn touch(&mut self, t: usize) {
        for v in self.tris[t].v {
            self.vert_tri[v] = t;
        }
    }

    pub fn is_constrained(&self, a: usize, b: usize) -> bool {
        self.segs.contains_key(&key(a, b))
    }

    fn locate(&self, p: &Point, start: usize) -> Loc {
        let mut t = start;
        let limit = 4 * self.tris.len() + 16;
        for step in 0..limit {
            let tri = self.tris[t];
            let mut moved = false;
            for k in 0..3 {
                let i = (k + step) % 3;
                if self.orient(tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], p) < 0.0 && tri.n[i] != NONE {
                    t = tri.n[i];
                    moved = true;
                    break;
                }
            }
            if !moved {
                return self.classify(t, p);
            }
        }
        // walking failed to terminate; fall back to a scan
        for t in 0..self.tris.len() {
            let v = self.tris[t].v;
            if (0..3).all(|i| self.orient(v[(i + 1) % 3], v[(i + 2) % 3], p) >= 0.0) {
                return self.classify(t, p);
            }
        }
        unreachable!("point outside the super-triangle")
    }

    fn classify(&self, t: usize, p: &Point) -> Loc {
        let v = self.tris[t].v;
        let zeros: Vec<usize> = (0..3).filter(|&i| self.orient(v[(i + 1) % 3], v[(i + 2) % 3], p) == 0.0).collect();
        match zeros.len() {
            0 => Loc::Tri(t),
            1 => Loc::Edge(t, zeros[0]),
            _ => {
                let i = (0..3).find(|i| !zeros.contains(i)).unwrap_or(0);
                Loc::Vertex(v[i])
            }
        }
    }

    /// Inserts a point and restores the constrained Delaunay property.
    /// Returns the vertex index (an existing one when `p` coincides).
    pub fn insert(&mut self, p: Point) -> usize {
        let start = if self.last < self.tris.len() { self.last } else { 0 };
        let loc = self.locate(&p, start);
        let v = self.pts.len();
        let stack = match loc {
            Loc::Vertex(u) => return u,
            Loc::Tri(t) => {
                self.pts.push(p);
                self.vert_tri.push(t);
                self.next.push(NONE);
                self.prev.push(NONE);
                self.split_tri(t, v)
            }
            Loc::Edge(t, i) => {
                self.pts.push(p);
                self.vert_tri.push(t);
                self.next.push(NONE);
                self.prev.push(NONE);
                self.split_edge(t, i, v)
            }
        };
        self.legalize(stack);
        self.last = self.vert_tri[v];
        v
    }

    fn split_tri(&mut self, t: usize, p: usize) -> Vec<(usize, usize)> {
        let Tri { v: [a, b, c], n: [na, nb, nc], inside } = self.tris[t];
        let t0 = t;
        let t1 = self.tris.len();
        let t2 = t1 + 1;
        self.tris[t0] = Tri { v: [a, b, p], n: [t1, t2, nc], inside };
        self.tris.push(Tri { v: [b, c, p], n: [t2, t0, na], inside });
        self.tris.push(Tri { v: [c, a, p], n: [t0, t1, nb], inside });
        self.replace_neighbor(na, t, t1);
        self.replace_neighbor(nb, t, t2);
        for x in [t0, t1, t2] {
            self.touch(x);
        }
        vec![(t0, 2), (t1, 2), (t2, 2)]
    }

    fn split_edge(&mut self, t: usize, i: usize, p: usize) -> Vec<(usize, usize)> {
        let tt = self.tris[t];
        let c = tt.v[i];
        let a = tt.v[(i + 1) % 3];
        let b = tt.v[(i + 2) % 3];
        let u = tt.n[i];
        self.segs.remove(&key(a, b));
        let t2 = self.tris.len();
        let t_ca = tt.n[(i + 2) % 3];
        let t_bc = tt.n[(i + 1) % 3];
        if u == NONE {
            self.tris[t] = Tri { v: [c, a, p], n: [NONE, t2, t_ca], inside: tt.inside };
            self.tris.push(Tri { v: [c, p, b], n: [NONE, t_bc, t], inside: tt.inside });
            self.replace_neighbor(t_bc, t, t2);
            self.touch(t);
            self.touch(t2);
            return vec![(t, 2), (t2, 1)];
        }
        let uu = self.tris[u];
        let j = self.idx(u, (0..3).map(|k| uu.v[k]).find(|&x| x != a && x != b).unwrap());
        let q = uu.v[j];
        let u_qb = uu.n[(j + 2) % 3];
        let u_aq = uu.n[(j + 1) % 3];
        let u2 = t2 + 1;
        self.tris[t] = Tri { v: [c, a, p], n: [u2, t2, t_ca], inside: tt.inside };
        self.tris.push(Tri { v: [c, p, b], n: [u, t_bc, t], inside: tt.inside });
        self.tris[u] = Tri { v: [q, b, p], n: [t2, u2, u_qb], inside: uu.inside };
        self.tris.push(Tri { v: [q, p, a], n: [t, u_aq, u], inside: uu.inside });
        self.replace_neighbor(t_bc, t, t2);
        self.replace_neighbor(u_aq, u, u2);
        for x in [t, t2, u, u2] {
            self.touch(x);
        }
        vec![(t, 2), (t2, 1), (u, 2), (u2, 1)]
    }

    /// Flips the edge opposite local vertex `i` of `t`; returns the two new
    /// triangles, each with the former apex `t.v[i]` at local index 0.
    fn flip(&mut self, t: usize, i: usize) -> (usize, usize) {
        let tt = self.tris[t];
        let p = tt.v[i];
        let a = tt.v[(i + 1) % 3];
        let b = tt.v[(i + 2) % 3];
        let t_a = tt.n[(i + 1) % 3];
        let t_b = tt.n[(i + 2) % 3];
        let u = tt.n[i];
        let uu = self.tris[u];
        let j = (0..3).find(|&k| uu.v[k] != a && uu.v[k] != b).unwrap();
        let q = uu.v[j];
        let u_b = uu.n[(j + 1) % 3];
        let u_a = uu.n[(j + 2) % 3];
        self.tris[t] = Tri { v: [p, a, q], n: [u_b, u, t_b], inside: tt.inside };
        self.tris[u] = Tri { v: [p, q, b], n: [u_a, t_a, t], inside: tt.inside };
        self.replace_neighbor(u_b, u, t);
        self.replace_neighbor(t_a, t, u);
        self.touch(t);
        self.touch(u);
        (t, u)
    }

    fn legalize(&mut self, mut stack: Vec<(usize, usize)>) {
        while let Some((t, i)) = stack.pop() {
            let tt = self.tris[t];
            let u = tt.n[i];
            if u == NONE {
                continue;
            }
            let a = tt.v[(i + 1) % 3];
            let b = tt.v[(i + 2) % 3];
            if self.is_constrained(a, b) {
                continue;
            }
            let uu = self.tris[u];
            let Some(q) = uu.v.iter().copied().find(|&x| x != a && x != b) else { continue };
            let [x, y, z] = tt.v.map(|k| co(&self.pts[k]));
            if incircle(x, y, z, co(&self.pts[q])) > 0.0 {
                let (t1, t2) = self.flip(t, i);
                stack.push((t1, 0));
                stack.push((t2, 0));
            }
        }
    }

    /// Triangles around an interior vertex, in clockwise order.
    pub fn around(&self, v: usize) -> Vec<usize> {
        let t0 = self.vert_tri[v];
        let mut out = Vec::new();
        let mut t = t0;
        loop {
            out.push(t);
            let k = self.idx(t, v);
            let nt = self.tris[t].n[(k + 2) % 3];
            if nt == NONE || nt == t0 || out.len() > self.tris.len() {
                break;
            }
            t = nt;
        }
        out
    }

    fn find_edge(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        for t in self.around(a) {
            let v = self.tris[t].v;
            if let Some(k) = (0..3).find(|&k| v[k] == b) {
                let ka = self.idx(t, a);
                // local index of the vertex opposite edge (a, b)
                return Some((t, 3 - k - ka));
            }
        }
        None
    }

    fn add_seg(&mut self, s: Seg) {
        self.segs.insert(key(s.from, s.to), s);
        self.next[s.from] = s.to;
        self.prev[s.to] = s.from;
    }

    /// Makes `s` an edge of the triangulation, splitting it as needed.
    /// Returns the vertices inserted on the way.
    pub fn enforce(&mut self, s: Seg, geom: &dyn BoundaryGeom, out: &mut Vec<usize>) -> Result<()> {
        if self.find_edge(s.from, s.to).is_some() {
            self.add_seg(s);
            return Ok(());
        }
        self.split_parts(s, geom, out)
    }

    fn split_parts(&mut self, s: Seg, geom: &dyn BoundaryGeom, out: &mut Vec<usize>) -> Result<()> {
        let tm = 0.5 * (s.t0 + s.t1);
        let p = geom.point(s.piece, tm);
        let len = (self.pts[s.to] - self.pts[s.from]).norm();
        if len <= 1e-13 * self.pts[s.from].norm().max(1.0) {
            return Err(HardyError::GeometryTooThin { feature: len, size: len });
        }
        let v = self.insert(p);
        if v == s.from || v == s.to || v < self.pts.len() - 1 {
            return Err(HardyError::GeometryTooThin { feature: len, size: len });
        }
        out.push(v);
        self.enforce(Seg { to: v, t1: tm, ..s }, geom, out)?;
        self.enforce(Seg { from: v, t0: tm, ..s }, geom, out)
    }

    /// Splits a present boundary subsegment at its parameter midpoint and
    /// fixes inside flags around the new boundary vertices.
    pub fn split_seg(&mut self, a: usize, b: usize, geom: &dyn BoundaryGeom) -> Result<Vec<usize>> {
        let s = self.segs.remove(&key(a, b)).expect("segment is constrained");
        let mut out = Vec::new();
        self.split_parts(s, geom, &mut out)?;
        for &v in &out {
            self.reflag(v);
        }
        Ok(out)
    }

    /// Classifies triangles around a boundary vertex by the boundary sector.
    fn reflag(&mut self, v: usize) {
        let (a, b) = (self.prev[v], self.next[v]);
        let ring = self.around(v);
        // ring is clockwise; reverse to walk counterclockwise
        let ccw: Vec<usize> = ring.into_iter().rev().collect();
        let start = ccw
            .iter()
            .position(|&t| {
                let k = self.idx(t, v);
                self.tris[t].v[(k + 1) % 3] == b
            })
            .expect("boundary edge is present");
        let mut inside = true;
        for s in 0..ccw.len() {
            let t = ccw[(start + s) % ccw.len()];
            self.tris[t].inside = inside;
            let k = self.idx(t, v);
            if self.tris[t].v[(k + 2) % 3] == a {
                inside = false;
            }
        }
    }

    /// Marks triangles inside the boundary loop by flooding from the super-triangle.
    pub fn flood(&mut self) {
        for t in &mut self.tris {
            t.inside = true;
        }
        let mut queue = VecDeque::new();
        for t in 0..self.tris.len() {
            if self.tris[t].v.iter().any(|&v| v < 3) {
                self.tris[t].inside = false;
                queue.push_back(t);
            }
        }
        while let Some(t) = queue.pop_front() {
            let tt = self.tris[t];
            for i in 0..3 {
                let u = tt.n[i];
                if u == NONE || !self.tris[u].inside {
                    continue;
                }
                if self.is_constrained(tt.v[(i + 1) % 3], tt.v[(i + 2) % 3]) {
                    continue;
                }
                self.tris[u].inside = false;
                queue.push_back(u);
            }
        }
    }

    fn walk_to(&self, from: usize, target: &Point) -> Walk {
        let v = self.tris[from].v;
        let start = (self.pts[v[0]] + self.pts[v[1]] + self.pts[v[2]]) / 3.0;
        let mut t = from;
        let mut came = NONE;
        for _ in 0..self.tris.len() + 8 {
            let tt = self.tris[t];
            let mut exit = None;
            for i in 0..3 {
                if tt.n[i] == came && came != NONE {
                    continue;
                }
                let (a, b) = (tt.v[(i + 1) % 3], tt.v[(i + 2) % 3]);
                if self.orient(a, b, target) >= 0.0 {
                    continue;
                }
                let oa = orient2d(co(&start), co(target), co(&self.pts[a]));
                let ob = orient2d(co(&start), co(target), co(&self.pts[b]));
                if oa <= 0.0 && ob >= 0.0 {
                    exit = Some(i);
                    break;
                }
            }
            let Some(i) = exit else { return Walk::Found(t) };
            let (a, b) = (tt.v[(i + 1) % 3], tt.v[(i + 2) % 3]);
            if self.is_constrained(a, b) || tt.n[i] == NONE {
                return Walk::Blocked(a, b);
            }
            came = t;
            t = tt.n[i];
        }
        Walk::Found(t)
    }

    /// Subsegments on the Delaunay cavity boundary of `p` whose diametral
    /// circle contains `p`.
    fn encroached_by(&self, t0: usize, p: &Point) -> Vec<(usize, usize)> {
        let mut seen = vec![t0];
        let mut stack = vec![t0];
        let mut hits = Vec::new();
        while let Some(t) = stack.pop() {
            let tt = self.tris[t];
            for i in 0..3 {
                let (a, b) = (tt.v[(i + 1) % 3], tt.v[(i + 2) % 3]);
                if self.is_constrained(a, b) {
                    if (self.pts[a] - p).dot(&(self.pts[b] - p)) < 0.0 && !hits.contains(&key(a, b)) {
                        hits.push(key(a, b));
                    }
                    continue;
                }
                let u = tt.n[i];
                if u == NONE || seen.contains(&u) {
                    continue;
                }
                let [x, y, z] = self.tris[u].v.map(|k| co(&self.pts[k]));
                if incircle(x, y, z, co(p)) > 0.0 {
                    seen.push(u);
                    stack.push(u);
                }
            }
        }
        hits
    }

    fn seg_encroached(&self, a: usize, b: usize) -> bool {
        let Some((t, i)) = self.find_edge(a, b) else { return false };
        let mut apexes = vec![(t, self.tris[t].v[i])];
        let u = self.tris[t].n[i];
        if u != NONE {
            let q = self.tris[u].v.iter().copied().find(|&x| x != a && x != b).unwrap();
            apexes.push((u, q));
        }
        apexes.into_iter().any(|(tri, q)| {
            self.tris[tri].inside && q >= 3 && {
                let (pa, pb, pq) = (self.pts[a], self.pts[b], self.pts[q]);
                (pa - pq).dot(&(pb - pq)) < -1e-12 * (pa - pq).norm() * (pb - pq).norm()
            }
        })
    }

    fn is_bad(&self, t: usize, size: &dyn Fn(&Point) -> f64, ratio: f64) -> bool {
        let tt = self.tris[t];
        if !tt.inside {
            return false;
        }
        let [a, b, c] = tt.v.map(|k| self.pts[k]);
        let l = [(b - c).norm(), (c - a).norm(), (a - b).norm()];
        let lmin = l.iter().copied().fold(f64::INFINITY, f64::min);
        let lmax = l.iter().copied().fold(0.0, f64::max);
        let area2 = ((b - a).x * (c - a).y - (b - a).y * (c - a).x).abs();
        let circ = l[0] * l[1] * l[2] / (2.0 * area2);
        circ / lmin > ratio || lmax > size(&((a + b + c) / 3.0))
    }

    /// Ruppert refinement of the inside triangles.
    pub fn refine(
        &mut self,
        geom: &dyn BoundaryGeom,
        size: &dyn Fn(&Point) -> f64,
        min_angle_deg: f64,
        max_vertices: usize,
    ) -> Result<()> {
        let ratio = 1.0 / (2.0 * min_angle_deg.to_radians().sin());
        let mut segq: Vec<(usize, usize)> = {
            let mut k: Vec<_> = self.segs.keys().copied().collect();
            k.sort_unstable();
            k
        };
        let mut triq: VecDeque<(usize, [usize; 3])> =
            (0..self.tris.len()).filter(|&t| self.tris[t].inside).map(|t| (t, self.tris[t].v)).collect();
        loop {
            if self.pts.len() > max_vertices {
                return Err(HardyError::DegenerateInput(format!("mesh exceeds {max_vertices} vertices")));
            }
            if let Some((a, b)) = segq.pop() {
                if self.is_constrained(a, b) && self.seg_encroached(a, b) {
                    let new = self.split_seg(a, b, geom)?;
                    self.requeue(&new, &mut segq, &mut triq);
                }
                continue;
            }
            let Some((t, verts)) = triq.pop_front() else { break };
            if self.tris[t].v != verts || !self.is_bad(t, size, ratio) {
                continue;
            }
            let [a, b, c] = verts.map(|k| self.pts[k]);
            let cc = circumcenter(&a, &b, &c);
            match self.walk_to(t, &cc) {
                Walk::Blocked(a, b) => {
                    if !self.is_constrained(a, b) {
                        continue;
                    }
                    let new = self.split_seg(a, b, geom)?;
                    self.requeue(&new, &mut segq, &mut triq);
                    triq.push_back((t, verts));
                }
                Walk::Found(f) => {
                    let enc = self.encroached_by(f, &cc);
                    if enc.is_empty() {
                        let v = self.insert(cc);
                        self.requeue(&[v], &mut segq, &mut triq);
                    } else {
                        for (a, b) in enc {
                            if self.is_constrained(a, b) {
                                let new = self.split_seg(a, b, geom)?;
                                self.requeue(&new, &mut segq, &mut triq);
                            }
                        }
                        triq.push_back((t, verts));
                    }
                }
            }
        }
        Ok(())
    }

    fn requeue(&self, verts: &[usize], segq: &mut Vec<(usize, usize)>, triq: &mut VecDeque<(usize, [usize; 3])>) {
        for &v in verts {
            for t in self.around(v) {
                let tt = self.tris[t];
                if tt.inside {
                    triq.push_back((t, tt.v));
                }
                for i in 0..3 {
                    let (a, b) = (tt.v[(i + 1) % 3], tt.v[(i + 2) % 3]);
                    if self.is_constrained(a, b) {
                        segq.push(key(a, b));
                    }
                }
            }
        }
    }

    /// Inside triangles and the boundary subsegments.
    pub fn finish(&self) -> (Vec<[usize; 3]>, Vec<Seg>) {
        let tris = self.tris.iter().filter(|t| t.inside).map(|t| t.v).collect();
        let mut segs: Vec<Seg> = self.segs.values().copied().collect();
        segs.sort_by_key(|s| (s.from, s.to));
        (tris, segs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Lines(Vec<[Point; 2]>);

    impl BoundaryGeom for Lines {
        fn point(&self, piece: usize, t: f64) -> Point {
            let [a, b] = self.0[piece];
            a + (b - a) * t
        }
    }

    fn square_cdt(extra: &[Point]) -> (Cdt, Lines) {
        let c = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let mut cdt = Cdt::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let vs: Vec<usize> = c.iter().map(|p| cdt.insert(*p)).collect();
        for p in extra {
            cdt.insert(*p);
        }
        let geom = Lines((0..4).map(|i| [c[i], c[(i + 1) % 4]]).collect());
        let mut out = Vec::new();
        for i in 0..4 {
            let s = Seg { from: vs[i], to: vs[(i + 1) % 4], piece: i, t0: 0.0, t1: 1.0, sigma: false };
            cdt.enforce(s, &geom, &mut out).unwrap();
        }
        cdt.flood();
        (cdt, geom)
    }

    fn check_delaunay(cdt: &Cdt) {
        for t in &cdt.tris {
            let [a, b, c] = t.v.map(|k| co(&cdt.pts[k]));
            assert!(orient2d(a, b, c) > 0.0);
            for i in 0..3 {
                let u = t.n[i];
                if u == NONE || cdt.is_constrained(t.v[(i + 1) % 3], t.v[(i + 2) % 3]) {
                    continue;
                }
                let q = cdt.tris[u].v.iter().copied().find(|&x| !t.v.contains(&x)).unwrap();
                assert!(incircle(a, b, c, co(&cdt.pts[q])) <= 0.0);
            }
        }
    }

    #[test]
    fn square_with_interior_points() {
        let extra: Vec<Point> = (1..10).flat_map(|i| (1..10).map(move |j| Point::new(i as f64 / 10.0, j as f64 / 10.0))).collect();
        let (cdt, _) = square_cdt(&extra);
        check_delaunay(&cdt);
        let (tris, segs) = cdt.finish();
        assert!(segs.len() >= 4);
        let start = segs[0].from;
        let mut v = cdt.next[start];
        let mut steps = 1;
        while v != start {
            v = cdt.next[v];
            steps += 1;
        }
        assert_eq!(steps, segs.len());
        let area: f64 = tris
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|k| cdt.pts[k]);
                0.5 * ((b - a).x * (c - a).y - (b - a).y * (c - a).x)
            })
            .sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_respects_angle_and_size() {
        let (mut cdt, geom) = square_cdt(&[]);
        cdt.refine(&geom, &|_| 0.1, 20.0, 100_000).unwrap();
        check_delaunay(&cdt);
        let (tris, _) = cdt.finish();
        let mut area = 0.0;
        for t in &tris {
            let [a, b, c] = t.map(|k| cdt.pts[k]);
            let l = [(b - c).norm(), (c - a).norm(), (a - b).norm()];
            let a2 = (b - a).x * (c - a).y - (b - a).y * (c - a).x;
            area += 0.5 * a2;
            assert!(l.iter().all(|&x| x <= 0.1 + 1e-12));
            let circ = l[0] * l[1] * l[2] / (2.0 * a2);
            let lmin = l.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(circ / lmin <= 1.0 / (2.0 * 20f64.to_radians().sin()) + 1e-9);
        }
        assert!((area - 1.0).abs() < 1e-12);
    }
}
