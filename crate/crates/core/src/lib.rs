//! Compatible finite elements on doubly periodic quadrilateral meshes.
//!
//! The lowest-order complex `Q1 -> RT0 -> DQ0` is assembled on a flat torus
//! and used to build structure-preserving discretizations of 2D
//! incompressible Euler and rotating shallow water.

pub mod app;
pub mod assembly;
pub mod error;
pub mod euler2d;
pub mod fespace;
pub mod hodge;
pub mod linalg;
pub mod mesh;
pub mod swe_linear;
pub mod swe_nonlinear;

pub use error::{Error, Result};
