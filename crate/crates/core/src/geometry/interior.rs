//! Interior (within-domain) distance to the singular set on a triangulation.
//!
//! Shortest paths run on the mesh edge graph, seeded with straight foot
//! segments from vertices that see their nearest point on the set. Relaxation
//! keeps line-of-sight shortcuts to the predecessor's anchor, so paths are
//! admissible curves inside the domain and never shorter than the Euclidean
//! distance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::index::SegmentIndex;
use super::{Point, SigmaSet};
use crate::error::{HardyError, Result};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-vertex interior distances plus the data needed to evaluate inside elements.
#[derive(Debug, Clone)]
pub struct InteriorDistance {
    pub values: Vec<f64>,
    anchors: Vec<(Point, f64)>,
    walls: SegmentIndex,
    tol: f64,
}

impl InteriorDistance {
    pub fn compute(mesh: &TriMesh, sigma: &SigmaSet) -> Result<Self> {
        let n = mesh.vertices.len();
        let walls = SegmentIndex::new(mesh.boundary_segments());
        let tol = sigma.tol();
        let visible = |a: &Point, b: &Point| walls.crossings(a, b, tol).is_empty();
        let mut dist = vec![f64::INFINITY; n];
        // anchor: the point a path reaches in a straight line, and its distance
        let mut anchor: Vec<(Point, f64)> = vec![(Point::zeros(), f64::INFINITY); n];
        let mut heap = BinaryHeap::new();
        for (v, p) in mesh.vertices.iter().enumerate() {
            let s = sigma.nearest(p);
            if s.distance <= tol || visible(p, &s.foot) {
                dist[v] = s.distance;
                anchor[v] = (s.foot, 0.0);
                heap.push(Entry { dist: s.distance, vertex: v });
            }
        }
        let adj = mesh.vertex_neighbors();
        let mut done = vec![false; n];
        while let Some(Entry { dist: d, vertex: u }) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            done[u] = true;
            let pu = mesh.vertices[u];
            for &w in &adj[u] {
                if done[w] {
                    continue;
                }
                let pw = mesh.vertices[w];
                let (ap, ad) = anchor[u];
                let via_anchor = ad + (pw - ap).norm();
                let (cand, anc) = if via_anchor < dist[w] && visible(&ap, &pw) {
                    (via_anchor, (ap, ad))
                } else {
                    (d + (pw - pu).norm(), (pu, d))
                };
                if cand < dist[w] {
                    dist[w] = cand;
                    anchor[w] = anc;
                    heap.push(Entry { dist: cand, vertex: w });
                }
            }
        }
        if let Some(v) = dist.iter().position(|d| !d.is_finite()) {
            return Err(HardyError::DisconnectedMesh(v));
        }
        Ok(InteriorDistance { values: dist, anchors: anchor, walls, tol })
    }

    /// Interior distance at `y` inside triangle `tri` of `mesh`.
    pub fn at(&self, mesh: &TriMesh, tri: usize, y: &Point, sigma: &SigmaSet) -> f64 {
        let s = sigma.nearest(y);
        if self.walls.crossings(y, &s.foot, self.tol).is_empty() {
            return s.distance;
        }
        mesh.triangles[tri]
            .iter()
            .map(|&v| {
                let (ap, ad) = self.anchors[v];
                if self.walls.crossings(&ap, y, self.tol).is_empty() {
                    ad + (y - ap).norm()
                } else {
                    self.values[v] + (y - mesh.vertices[v]).norm()
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Interior distance from the mesh vertex nearest to `x`.
pub fn interior_distance(x: &Point, sigma: &SigmaSet, mesh: &TriMesh) -> Result<f64> {
    let field = InteriorDistance::compute(mesh, sigma)?;
    let v = mesh.nearest_vertex(x);
    Ok(field.values[v])
}
