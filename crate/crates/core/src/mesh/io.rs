//! Plain-text mesh format.
//!
//! ```text
//! # hardy-mesh v1
//! sigma_dimension <s>
//! vertices <N>
//! <x> <y>                 (17 significant digits)
//! triangles <M>
//! <i> <j> <k>
//! boundary_edges <K>
//! <a> <b> <marker>        (marker 1 on the singular set, 0 otherwise)
//! sigma_points <P>
//! <v>
//! ```
//!
//! Other lines starting with `#` are ignored.

use std::fmt::Write as _;

use super::{BoundaryEdge, TriMesh};
use crate::error::{HardyError, Result};
use crate::geometry::Point;

const HEADER: &str = "# hardy-mesh v1";

impl TriMesh {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{HEADER}");
        let _ = writeln!(s, "sigma_dimension {}", self.sigma_dimension);
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for p in &self.vertices {
            let _ = writeln!(s, "{:.16e} {:.16e}", p.x, p.y);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for [a, b, c] in &self.triangles {
            let _ = writeln!(s, "{a} {b} {c}");
        }
        let _ = writeln!(s, "boundary_edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {}", e.a, e.b, u8::from(e.on_sigma));
        }
        let _ = writeln!(s, "sigma_points {}", self.sigma_points.len());
        for v in &self.sigma_points {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TriMesh> {
        let rows: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| {
                let l = l.trim();
                !l.is_empty() && (l == HEADER || !l.starts_with('#'))
            })
            .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
            .collect();
        let mut r = Reader { rows: &rows, pos: 0 };
        let (line, head) = r.row("header")?;
        if head.join(" ") != HEADER {
            return Err(HardyError::Parse { line, message: "bad header".into() });
        }
        let dim: u32 = r.count("sigma_dimension")? as u32;
        let nv = r.count("vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (l, f) = r.fields(2)?;
            vertices.push(Point::new(num(l, f[0])?, num(l, f[1])?));
        }
        let nt = r.count("triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (l, f) = r.fields(3)?;
            triangles.push([num(l, f[0])?, num(l, f[1])?, num(l, f[2])?]);
        }
        let nb = r.count("boundary_edges")?;
        let mut boundary_edges = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (l, f) = r.fields(3)?;
            boundary_edges.push(BoundaryEdge { a: num(l, f[0])?, b: num(l, f[1])?, on_sigma: num::<u8>(l, f[2])? == 1 });
        }
        let np = r.count("sigma_points")?;
        let mut sigma_points = Vec::with_capacity(np);
        for _ in 0..np {
            let (l, f) = r.fields(1)?;
            sigma_points.push(num(l, f[0])?);
        }
        let n = vertices.len();
        if triangles.iter().flatten().chain(&sigma_points).any(|&v| v >= n)
            || boundary_edges.iter().any(|e| e.a >= n || e.b >= n)
        {
            return Err(HardyError::Parse { line: 0, message: "vertex index out of range".into() });
        }
        Ok(TriMesh { vertices, triangles, boundary_edges, sigma_points, sigma_dimension: dim, grading: None })
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| HardyError::Parse { line, message: format!("bad number {s:?}") })
}

struct Reader<'a> {
    rows: &'a [(usize, Vec<&'a str>)],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn row(&mut self, what: &str) -> Result<(usize, &'a [&'a str])> {
        let last = self.rows.last().map_or(0, |r| r.0);
        let (line, f) = self.rows.get(self.pos).ok_or(HardyError::Parse { line: last, message: format!("missing {what}") })?;
        self.pos += 1;
        Ok((*line, f.as_slice()))
    }

    fn count(&mut self, name: &str) -> Result<usize> {
        let (line, f) = self.row(name)?;
        if f.len() != 2 || f[0] != name {
            return Err(HardyError::Parse { line, message: format!("expected {name}") });
        }
        num(line, f[1])
    }

    fn fields(&mut self, width: usize) -> Result<(usize, &'a [&'a str])> {
        let (line, f) = self.row("row")?;
        if f.len() != width {
            return Err(HardyError::Parse { line, message: format!("expected {width} fields") });
        }
        Ok((line, f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, Submanifold};
    use crate::mesh::triangulate;

    #[test]
    fn round_trip_is_exact() {
        let m = triangulate(&Domain::disk(Point::zeros(), 1.0, 64), &Submanifold::FullBoundary, 0.3, 0.5).unwrap();
        let back = TriMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_edges, m.boundary_edges);
        assert_eq!(back.to_text(), m.to_text());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(TriMesh::from_text("hello"), Err(HardyError::Parse { .. })));
        let bad = "# hardy-mesh v1\nsigma_dimension 1\nvertices 1\n0 0\ntriangles 1\n0 1 2\nboundary_edges 0\nsigma_points 0\n";
        assert!(TriMesh::from_text(bad).is_err());
    }
}
