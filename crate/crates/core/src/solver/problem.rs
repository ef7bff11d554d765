//! Problem description: domain, density and the discrete target measure.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::geometry::{ConvexBody, Grid};

/// Domain shapes accepted in problem files. Curved domains are replaced by
/// circumscribed polygons with edges no longer than the grid step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Disc {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        axes: [f64; 2],
    },
    Square {
        #[serde(default)]
        center: [f64; 2],
        half: f64,
    },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl DomainSpec {
    pub fn unit_disc() -> Self {
        DomainSpec::Disc { center: [0.0, 0.0], radius: 1.0 }
    }

    /// Width of the bounding box along its longer side.
    pub fn width(&self) -> f64 {
        match self {
            DomainSpec::Disc { radius, .. } => 2.0 * radius,
            DomainSpec::Ellipse { axes, .. } => 2.0 * axes[0].max(axes[1]),
            DomainSpec::Square { half, .. } => 2.0 * half,
            DomainSpec::Polygon { vertices } => {
                let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (hi[0] - lo[0]).max(hi[1] - lo[1])
            }
        }
    }

    /// Polygon used for grid step `h`.
    pub fn body(&self, h: f64) -> Result<ConvexBody, SolverError> {
        let sides = |r: f64| ((2.0 * PI * r / h).ceil() as usize).max(16);
        let bad = |what: &str| SolverError::InvalidProblem(format!("{what} must be positive"));
        Ok(match self {
            DomainSpec::Disc { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(bad("radius"));
                }
                ConvexBody::circumscribed_disc(*center, *radius, sides(*radius))
            }
            DomainSpec::Ellipse { center, axes } => {
                if !(axes[0] > 0.0 && axes[1] > 0.0) {
                    return Err(bad("ellipse axes"));
                }
                ConvexBody::circumscribed_ellipse(*center, *axes, sides(axes[0].max(axes[1])))
            }
            DomainSpec::Square { center, half } => {
                if !(*half > 0.0) {
                    return Err(bad("half width"));
                }
                let [cx, cy] = *center;
                ConvexBody::polygon(&[[cx - half, cy - half], [cx + half, cy - half], [cx + half, cy + half], [cx - half, cy + half]])?
            }
            DomainSpec::Polygon { vertices } => ConvexBody::polygon(vertices)?,
        })
    }
}

fn default_blocks() -> usize {
    16
}

/// Density `f` with bounds `λ <= f <= Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub kind: DensityKind,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    #[serde(default)]
    pub seed: u64,
    /// Constant value for `const`; defaults to `lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Blocks per axis of the bounding box for `random` and `checker`.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Const,
    /// Independent fair choice of `λ` or `Λ` on each block.
    Random,
    /// Alternating `λ`/`Λ` blocks.
    Checker,
}

impl DensitySpec {
    pub fn constant(value: f64) -> Self {
        Self { kind: DensityKind::Const, lambda: value, big_lambda: value, seed: 0, value: None, blocks: default_blocks() }
    }

    pub fn random(lambda: f64, big_lambda: f64, seed: u64) -> Self {
        Self { kind: DensityKind::Random, lambda, big_lambda, seed, value: None, blocks: default_blocks() }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite() && self.big_lambda.is_finite()) {
            return Err(SolverError::InvalidProblem("density bounds must be positive and finite".into()));
        }
        if self.lambda > self.big_lambda {
            return Err(SolverError::InvalidProblem(format!("lambda {} exceeds Lambda {}", self.lambda, self.big_lambda)));
        }
        if let Some(v) = self.value {
            if !(v >= self.lambda && v <= self.big_lambda) {
                return Err(SolverError::InvalidProblem(format!("constant density {v} outside [lambda, Lambda]")));
            }
        }
        if self.blocks == 0 {
            return Err(SolverError::InvalidProblem("blocks must be positive".into()));
        }
        Ok(())
    }

    /// The density as a function on the plane, with blocks laid over `bbox`.
    pub fn field(&self, bbox: ([f64; 2], [f64; 2])) -> DensityField {
        let levels = match self.kind {
            DensityKind::Const => Vec::new(),
            DensityKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..self.blocks * self.blocks).map(|_| rng.gen_bool(0.5)).collect()
            }
            DensityKind::Checker => {
                (0..self.blocks * self.blocks).map(|k| (k / self.blocks + k % self.blocks) % 2 == 0).collect()
            }
        };
        DensityField {
            constant: self.value.unwrap_or(self.lambda),
            lo: self.lambda,
            hi: self.big_lambda,
            origin: bbox.0,
            size: [(bbox.1[0] - bbox.0[0]) / self.blocks as f64, (bbox.1[1] - bbox.0[1]) / self.blocks as f64],
            blocks: self.blocks,
            high: levels,
        }
    }
}

/// Piecewise-constant density evaluated pointwise.
#[derive(Debug, Clone)]
pub struct DensityField {
    constant: f64,
    lo: f64,
    hi: f64,
    origin: [f64; 2],
    size: [f64; 2],
    blocks: usize,
    high: Vec<bool>,
}

impl DensityField {
    pub fn at(&self, x: [f64; 2]) -> f64 {
        if self.high.is_empty() {
            return self.constant;
        }
        let b = |k: usize| (((x[k] - self.origin[k]) / self.size[k]).floor().max(0.0) as usize).min(self.blocks - 1);
        if self.high[b(0) * self.blocks + b(1)] {
            self.hi
        } else {
            self.lo
        }
    }
}

fn default_tol() -> f64 {
    1e-6
}

/// Serialized problem: `{"domain", "f", "grid": h, "tol"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    pub f: DensitySpec,
    pub grid: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

/// A discretized Dirichlet problem `det D²u = f`, `u = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct MAProblem {
    pub spec: ProblemSpec,
    pub grid: Arc<Grid>,
    /// `f` at the interior nodes.
    pub f: Vec<f64>,
    /// Target mass of each interior node: `f` times its dual cell area.
    pub mu: Vec<f64>,
    pub lambda: f64,
    pub big_lambda: f64,
}

impl MAProblem {
    pub fn new(spec: ProblemSpec) -> Result<Self, SolverError> {
        spec.f.validate()?;
        let h = spec.grid;
        if !(h > 0.0 && h.is_finite()) {
            return Err(SolverError::InvalidProblem("grid step must be positive".into()));
        }
        if !(spec.tol > 0.0) {
            return Err(SolverError::InvalidProblem("tolerance must be positive".into()));
        }
        let body = spec.domain.body(h)?;
        let grid = Grid::on_domain(&body, h)?;
        let verts = body.vertices_2d();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &verts {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let field = spec.f.field((lo, hi));
        let f: Vec<f64> = grid.interior_nodes().map(|i| field.at(grid.pos(i))).collect();
        let areas = grid.dual_areas();
        let mu: Vec<f64> = f.iter().zip(&areas).map(|(a, b)| a * b).collect();
        if mu.iter().sum::<f64>() <= 0.0 {
            return Err(SolverError::InfeasibleMass);
        }
        let (lambda, big_lambda) = (spec.f.lambda, spec.f.big_lambda);
        Ok(Self { spec, grid: Arc::new(grid), f, mu, lambda, big_lambda })
    }

    /// Interior nodes per axis of the bounding box.
    pub fn resolution(&self) -> f64 {
        self.spec.domain.width() / self.spec.grid
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }
}
