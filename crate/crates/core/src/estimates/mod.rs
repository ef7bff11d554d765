//! Empirical verification of the interior `L log^k L` Hessian estimates:
//! normalized solutions, section averages of `‖D²u‖`, contact sets of convex
//! envelopes, level-set and maximal inequalities, and the covering reduction.

mod hessmean;
mod integrals;
mod levelsets;
mod normalized;
mod pipeline;
mod reg;
mod report;
mod supermean;

pub use hessmean::{verify_hessmean, HessmeanReport, HessmeanSample};
pub use integrals::{
    key_estimate, layer_cake, llogk_integral, verify_main, verify_main_fields, LayerCake, MainReport, MainResult, RegionField, Rung,
    ThresholdScan, LAYER_CAKE_POINTS,
};
pub use levelsets::{replay_levelsets, verify_levelsets, ChainConstants, LevelsetReplay, LevelsetReport, MAXIMAL_LEVEL};
pub use normalized::{normalize_section, normalize_section_on, NormalizedSolution};
pub use pipeline::{run_instance, working_regions, InstanceOutput, PipelineOptions, Stage, StageError};
pub use reg::{verify_reg_reduction, RegPiece, RegReport};
pub use report::{fmt_num, rows_csv, EstimateReport, IntegralRecord, ReportRow, Verdict, CSV_HEADER, ROW_IDS};
pub use supermean::{verify_hesssupermean, ContactSample, SupermeanReport, ABP_CONSTANT, EPS_GRID, PSD_TOL};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::sections::SectionError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("empty contact set in the section at node {node} with height {height:e}")]
    EmptyContactSet { node: usize, height: f64 },
    #[error("section at node {node} misses the ball of radius {r1:e}")]
    ShapeDegeneracy { node: usize, r1: f64 },
    #[error("section at node {node} with height {height:e} has no interior")]
    DegenerateSection { node: usize, height: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
