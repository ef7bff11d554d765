//! Convex geometry: polytopes, affine maps, John normalization, convex
//! envelopes and piecewise-linear convex functions.

mod affine;
mod body;
pub mod cell;
mod envelope;
pub mod grid;
mod hull3;
mod john;
mod plfunc;
pub mod sym2;

pub use affine::{operator_norm, AffineMap};
pub use body::{hull2d, polygon_area, ConvexBody};
pub use envelope::{convex_envelope, EnvelopeResult, CONTACT_REL_TOL};
pub use grid::{Grid, Lattice};
pub use john::{john_normalize, max_inscribed_ellipsoid, normalization_radii, unit_ball_volume, JohnOptions};
pub use plfunc::{
    certified_cell, stencil_cell, Facet, GridDoc, HessianFit, HessianStencil, PLConvexFunction, PLDocument,
    CONVEXITY_TOL,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate body: {0}")]
    DegenerateBody(String),
    #[error("node {node} has no full radius-2 stencil")]
    BoundaryStencil { node: usize },
    #[error("function is not convex at node {node}")]
    NonConvexInput { node: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
}
