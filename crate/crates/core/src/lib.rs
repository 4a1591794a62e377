//! Half-Laplacian Dirichlet problems on star-shaped planar domains.

pub mod error;
pub mod geometry;
pub mod quadrature;

pub use error::{Error, Result};
pub mod kernel;
pub mod assembly;
pub mod solver;
pub mod trace;
pub mod shape;
pub mod optimizer;
pub mod symmetry;
