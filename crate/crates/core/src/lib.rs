//! Spectral and subordination numerics for the nonlocal operator φ(−Δ|_D)
//! on model planar domains: kernels, potentials, boundary traces and
//! semilinear Dirichlet solvers.

pub mod bernstein;
pub mod cache;
pub mod density;
pub mod error;
pub mod quad;
pub mod solvers;
pub mod geometry;
pub mod kernels;
pub mod mc;
pub mod model;
pub mod potentials;
pub mod special;
pub mod spectrum;

pub use error::{PhidError, Result};
