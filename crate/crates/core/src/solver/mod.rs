//! Discrete Alexandrov solutions of `det D²u = f`, `u = 0` on the boundary.

mod catalog;
mod measure;
mod newton;
mod problem;

pub use catalog::{analytic_catalog, catalog_shape, CatalogEntry};
pub use measure::ma_measure;
pub use newton::{solve, solve_with, MASolution, SolutionDocument, SolveOptions};
pub use problem::{DensityField, DensityKind, DensitySpec, DomainSpec, MAProblem, ProblemSpec};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("total target mass is zero")]
    InfeasibleMass,
    #[error("unknown catalog entry {0:?}")]
    UnknownName(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
