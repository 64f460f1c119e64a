//! Nonconforming virtual element discretization of the Cahn-Hilliard
//! equation on polygonal meshes, with convex-splitting Runge-Kutta time
//! stepping.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mesh;
pub mod par;
pub mod projections;
pub mod quadrature;
pub mod timestepping;

pub use error::{Error, Result};
pub use mesh::{BoundingBox, Mesh, Point};
pub use par::Execution;
