//! Fixtures shared by the benchmarks.

use hardy_core::mesh::triangulate;
use hardy_core::{DeformationField, Discretization, Domain, HardySolution, MassOptions, Point, SolverOptions, Submanifold, TriMesh};

/// Unit square graded toward a point at the middle of the bottom edge.
pub fn square_point_mesh(h: f64) -> TriMesh {
    triangulate(&Domain::unit_square(), &Submanifold::point(Point::new(0.5, 0.0)), h, 1.0).expect("mesh")
}

pub fn solved(h: f64) -> (Discretization, HardySolution) {
    let disc = Discretization::new(square_point_mesh(h), &MassOptions::default()).expect("assemble");
    let sol = disc.solve(&SolverOptions::default()).expect("solve");
    (disc, sol)
}

pub fn bump() -> DeformationField {
    DeformationField::DirectionalBump { center: Point::new(0.4, 0.3), radius: 0.4, vector: Point::new(0.3, -0.2) }
}
