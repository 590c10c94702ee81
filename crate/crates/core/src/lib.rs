//! Hardy constants `H(Omega, Sigma)` of planar domains with a boundary
//! singular set, computed by P1 finite elements, and their shape derivatives.

pub mod boundary_motion;
pub mod config;
pub mod deform;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod sensitivity;
pub mod spectral;

pub use deform::{DeformationField, Diffeomorphism};
pub use error::{HardyError, Result};
pub use geometry::{Domain, Point, Submanifold};
pub use mesh::TriMesh;
pub use spectral::{Discretization, HardySolution, MassOptions, SolverOptions};
