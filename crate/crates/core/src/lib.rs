//! Numerical laboratory for the Dirichlet Monge–Ampère equation
//! `det D²u = f` with `λ <= f <= Λ`: discrete Alexandrov solutions, section
//! geometry, and empirical verification of interior `L log^k L` Hessian
//! estimates.

pub mod estimates;
pub mod geometry;
pub mod sections;
pub mod solver;

/// Version tag written into every serialized document.
pub const SCHEMA: &str = "ma-lab/1";

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
