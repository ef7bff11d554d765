//! Sections of discrete convex solutions, their engulfing constants,
//! Besicovitch-type covers and the maximal Hessian field.

mod atlas;
mod cover;
mod engulf;
mod height;
mod maximal;
mod sampling;
mod section;

pub use atlas::{build_atlas, AtlasOptions, SectionAtlas};
pub use cover::{cover, CoverResult, OverlapProfile, EPS0};
pub use engulf::{check_monotone, engulfing_pairs, verify_engulfing, EngulfingReport};
pub use height::safe_height;
pub use maximal::{maximal_field, MaximalField, MaximalValue, MIN_RUNG_NODES};
pub use sampling::{halton, sample_centers};
pub use section::{dilate, excess, node_excess, section, section_with_rays, Section};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SectionError {
    #[error("section at node {node} with height {height:e} leaves the domain")]
    EscapesDomain { node: usize, height: f64 },
    #[error("no positive safe height: {0}")]
    NoPositiveHeight(String),
    #[error("inclusion fails at node {node}, height {height:e}, tau {tau}: witness {witness:?}")]
    InclusionViolation { node: usize, height: f64, tau: f64, witness: [f64; 2] },
    #[error("node {node} is not covered")]
    NotCovered { node: usize },
    #[error("section at node {node} with height {height:e} is empty")]
    EmptySection { node: usize, height: f64 },
    #[error("node {node} is not an interior node")]
    NotInterior { node: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
