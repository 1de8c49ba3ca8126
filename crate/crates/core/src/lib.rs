//! First-order virtual element method (VEM) for three-dimensional linear
//! elasticity on arbitrary polyhedral meshes.
//!
//! The element stiffness is built from boundary data only: vertex
//! coordinates, planar face normals and the face moments of the vertex
//! barycentric coordinates. Everything the solver needs is organised as
//!
//! - [`geometry`]: polyhedral mesh data model, connectivity and measures
//! - [`quadrature`]: nodal face/cell rules, face moments, high-order cell rules
//! - [`element`]: projection matrices, material matrix and element stiffness
//! - [`assembly`]: global stiffness/load assembly, Dirichlet elimination, solve
//! - [`analysis`]: analytical benchmarks, error measures, convergence studies
//! - [`meshgen`]: structured hex, clipped Voronoi and Lloyd CVT meshes, mesh I/O

pub mod analysis;
pub mod assembly;
pub mod element;
mod error;
pub mod geometry;
pub mod meshgen;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::{Point3, PolyMesh};

/// Rigid-body and strain 6-vectors use the ordering (11, 22, 33, 12, 23, 31).
pub type Vector6 = nalgebra::Vector6<f64>;
