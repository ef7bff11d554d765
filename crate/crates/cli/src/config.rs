//! Experiment configuration files.

use std::path::{Path, PathBuf};

use ma_lab_core::estimates::{PipelineOptions, Stage};
use ma_lab_core::solver::{catalog_shape, DensityKind, DensitySpec, DomainSpec, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn default_name() -> String {
    "run".into()
}
fn default_tol() -> f64 {
    1e-6
}
fn default_stages() -> Vec<String> {
    STAGE_ORDER.iter().map(|s| s.to_string()).collect()
}
fn default_ks() -> Vec<u32> {
    vec![0, 1, 2]
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Every stage name in dependency order.
pub const STAGE_ORDER: [&str; 7] = ["solve", "atlas", "hessmean", "hesssupermean", "levelsets", "main", "reg"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCounts {
    /// Section centers per instance.
    pub centers: usize,
    /// Heights `ρ/2^j`, `j < heights`, at every center.
    pub heights: usize,
    /// Level-set rungs rebuilt through the covering.
    pub replay_rungs: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        Self { centers: 100, heights: 2, replay_rungs: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Closed-form catalog problem, e.g. `quadratic_disc`. Excludes
    /// `domain` and `f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<DensitySpec>,
    /// Grid steps across the domain width: `h = width / grid`.
    pub grid: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_stages")]
    pub stages: Vec<String>,
    #[serde(default = "default_ks")]
    pub k: Vec<u32>,
    #[serde(default)]
    pub samples: SampleCounts,
    /// One instance per seed, overriding `f.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

/// Flag overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub k: Option<Vec<u32>>,
    pub out: Option<PathBuf>,
}

/// The validated stage list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub solve: bool,
    pub atlas: bool,
    pub verify: Vec<Stage>,
}

impl Plan {
    /// Whether the verification pipeline runs at all.
    pub fn pipeline(&self) -> bool {
        self.atlas || !self.verify.is_empty()
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.solve {
            v.push("solve");
        }
        if self.atlas {
            v.push("atlas");
        }
        v.extend(self.verify.iter().map(|s| s.name()));
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub spec: ProblemSpec,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(CliError::json(path))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(g) = o.grid {
            self.grid = g;
        }
        if let Some(s) = o.seed {
            self.seeds = Some(vec![s]);
        }
        if let Some(k) = &o.k {
            self.k = k.clone();
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    fn domain_and_density(&self) -> Result<(DomainSpec, DensitySpec), CliError> {
        let bad = |m: &str| CliError::Validation(m.into());
        match (&self.catalog, &self.f) {
            (Some(name), None) => {
                if self.domain.is_some() {
                    return Err(bad("catalog problems fix their own domain"));
                }
                let (domain, h, _) = catalog_shape(name).map_err(|e| CliError::Validation(e.to_string()))?;
                Ok((domain, DensitySpec::constant(h[0] * h[2] - h[1] * h[1])))
            }
            (None, Some(f)) => Ok((self.domain.clone().unwrap_or_else(DomainSpec::unit_disc), f.clone())),
            (Some(_), Some(_)) => Err(bad("give either a catalog name or a density, not both")),
            (None, None) => Err(bad("a catalog name or a density is required")),
        }
    }

    /// Checks `λ <= Λ`, `h > 0` and the stage order.
    pub fn validate(&self) -> Result<Plan, CliError> {
        let bad = |m: String| CliError::Validation(m);
        let (domain, f) = self.domain_and_density()?;
        f.validate().map_err(|e| bad(e.to_string()))?;
        if self.grid == 0 {
            return Err(bad("grid must be positive".into()));
        }
        let h = self.step(&domain);
        if !(h > 0.0 && h.is_finite()) {
            return Err(bad(format!("grid step {h} is not positive")));
        }
        if !(self.tol > 0.0) {
            return Err(bad("tol must be positive".into()));
        }
        if self.k.is_empty() {
            return Err(bad("k range is empty".into()));
        }
        if self.samples.centers == 0 || self.samples.heights == 0 {
            return Err(bad("sample counts must be positive".into()));
        }
        if self.catalog.is_some() && self.seeds.is_some() {
            return Err(bad("seeds apply to density problems only".into()));
        }
        if self.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(bad("seed list is empty".into()));
        }
        let plan = plan(&self.stages)?;
        if !plan.solve {
            return Err(bad("a run starts with the solve stage".into()));
        }
        Ok(plan)
    }

    fn step(&self, domain: &DomainSpec) -> f64 {
        domain.width() / self.grid as f64
    }

    /// The problems of this run, one per seed.
    pub fn instances(&self) -> Result<Vec<Instance>, CliError> {
        let (domain, f) = self.domain_and_density()?;
        let grid = self.step(&domain);
        let spec = |f: DensitySpec| ProblemSpec { domain: domain.clone(), f, grid, tol: self.tol };
        Ok(match &self.seeds {
            Some(seeds) => seeds
                .iter()
                .map(|&seed| Instance { id: format!("{}-s{seed}", self.name), spec: spec(DensitySpec { seed, ..f.clone() }) })
                .collect(),
            None if f.kind == DensityKind::Random => {
                vec![Instance { id: format!("{}-s{}", self.name, f.seed), spec: spec(f) }]
            }
            None => vec![Instance { id: self.name.clone(), spec: spec(f) }],
        })
    }

    pub fn pipeline_options(&self, plan: &Plan) -> PipelineOptions {
        let mut o = PipelineOptions { ks: self.k.clone(), stages: plan.verify.clone(), ..PipelineOptions::default() };
        o.atlas.centers = self.samples.centers;
        o.atlas.monotone_centers = self.samples.centers;
        o.heights = self.samples.heights;
        o.replay_rungs = self.samples.replay_rungs;
        o
    }
}

/// Parses a stage list, which must follow the dependency order without
/// repeats.
pub fn plan(stages: &[String]) -> Result<Plan, CliError> {
    let mut last = None;
    let mut p = Plan { solve: false, atlas: false, verify: Vec::new() };
    for s in stages {
        let pos = STAGE_ORDER
            .iter()
            .position(|x| x == s)
            .ok_or_else(|| CliError::Validation(format!("unknown stage {s:?}")))?;
        if last.is_some_and(|l| pos <= l) {
            return Err(CliError::Validation(format!("stage {s:?} is out of order; expected {}", STAGE_ORDER.join(" -> "))));
        }
        last = Some(pos);
        match s.as_str() {
            "solve" => p.solve = true,
            "atlas" => p.atlas = true,
            other => p.verify.push(Stage::parse(other).expect("listed stage")),
        }
    }
    Ok(p)
}

/// Parses `a..b` (inclusive), `a,b,c` or a single `k`.
pub fn parse_ks(s: &str) -> Result<Vec<u32>, String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("not a k value: {t:?}"));
    let ks: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty k range {s:?}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if ks.is_empty() {
        return Err("empty k list".into());
    }
    Ok(ks)
}
