//! Solving and verifying configured instances.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ma_lab_core::estimates::{run_instance, EstimateReport, InstanceOutput, PipelineOptions, Stage};
use ma_lab_core::solver::{solve, MAProblem, MASolution, SolutionDocument};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Instance, Plan};
use crate::error::CliError;
use crate::manifest::{sha256_hex, RunManifest, StageTime};

pub fn solve_instance(inst: &Instance) -> Result<MASolution, CliError> {
    let err = |source| CliError::Solver { instance: inst.id.clone(), source };
    let problem = MAProblem::new(inst.spec.clone()).map_err(err)?;
    solve(&problem).map_err(err)
}

pub fn solution_json(sol: &MASolution) -> String {
    serde_json::to_string_pretty(&sol.to_document()).expect("solution documents serialize") + "\n"
}

/// Reads a solution document; the instance id is the file stem.
pub fn load_solution(path: &Path) -> Result<(String, MASolution), CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let doc: SolutionDocument = serde_json::from_str(&text).map_err(CliError::json(path))?;
    let sol = MASolution::from_document(&doc).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("instance");
    let id = name.strip_suffix(".json").unwrap_or(name);
    let id = id.strip_suffix(".solution").unwrap_or(id);
    Ok((id.to_string(), sol))
}

/// The stage a report row belongs to: `atlas` or a verification stage.
pub fn row_stage(id: &str) -> &'static str {
    match id {
        "john_det" | "norm_identity" | "boundary_zero" | "alex_band" | "hessmean_average" | "hessmean_gradient"
        | "transformation_law" | "divergence_identity" => "hessmean",
        "contact_fraction" | "hessian_floor" | "abp_chain" | "envelope_domination" | "floor_rotation_invariance" => {
            "hesssupermean"
        }
        "levelsets" | "levelsets_covering" | "maximal_inequality" => "levelsets",
        _ if id == "key_estimate" || id.starts_with("layer_cake_") || id.starts_with("main_llogk_") => "main",
        _ if id.starts_with("reg_") => "reg",
        _ => "atlas",
    }
}

/// Keeps only the rows of `stage`.
pub fn restrict(report: &EstimateReport, stage: &str) -> EstimateReport {
    let mut r = report.clone();
    r.rows.retain(|row| row_stage(&row.inequality_id) == stage);
    r
}

pub fn violation(report: &EstimateReport) -> Result<(), CliError> {
    let ids: Vec<&str> = report.failures().map(|r| r.inequality_id.as_str()).collect();
    if ids.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violation { count: ids.len(), ids: ids.join(", ") })
    }
}

pub fn verify(id: &str, sol: &MASolution, stages: &[Stage], ks: &[u32]) -> Result<InstanceOutput, CliError> {
    let opts = PipelineOptions { stages: stages.to_vec(), ks: ks.to_vec(), ..PipelineOptions::default() };
    Ok(run_instance(id, sol, &opts)?)
}

/// Charges pipeline timings of unlisted stages to the next listed one.
fn charge(listed: &[&str], timings: &[(String, f64)]) -> Vec<StageTime> {
    let mut out: Vec<StageTime> = Vec::new();
    let mut pending = 0.0;
    for (name, t) in timings {
        pending += t;
        if listed.contains(&name.as_str()) {
            out.push(StageTime { stage: name.clone(), seconds: pending });
            pending = 0.0;
        }
    }
    if let Some(last) = out.last_mut() {
        last.seconds += pending;
    }
    out
}

fn run_one(inst: &Instance, plan: &Plan, opts: &PipelineOptions, dir: &Path, hash: &str) -> Result<(PathBuf, RunManifest), CliError> {
    let mut m = RunManifest::new(&inst.id, hash.to_string());
    let clock = Instant::now();
    let sol = solve_instance(inst)?;
    m.stages.push(StageTime { stage: "solve".into(), seconds: clock.elapsed().as_secs_f64() });
    m.write_output(dir, &format!("{}.solution.json", inst.id), "solution", solution_json(&sol).as_bytes())?;
    if plan.pipeline() {
        let out = run_instance(&inst.id, &sol, opts)?;
        m.stages.extend(charge(&plan.names(), &out.timings));
        let atlas = serde_json::to_string_pretty(&out.atlas).expect("atlas serializes") + "\n";
        m.write_output(dir, &format!("{}.atlas.json", inst.id), "atlas", atlas.as_bytes())?;
        let json = serde_json::to_string_pretty(&out.report).expect("report serializes") + "\n";
        m.write_output(dir, &format!("{}.report.json", inst.id), "report_json", json.as_bytes())?;
        m.write_output(dir, &format!("{}.report.csv", inst.id), "report_csv", out.report.to_csv().as_bytes())?;
        m.failures = out.report.failures().map(|r| r.inequality_id.clone()).collect();
    }
    let path = dir.join(format!("{}.manifest.json", inst.id));
    m.save(&path)?;
    Ok((path, m))
}

/// Validates `config`, then solves and verifies every instance with at most
/// `jobs` running at once. Returns the manifests in instance order.
pub fn run(config: &ExperimentConfig, jobs: usize) -> Result<Vec<(PathBuf, RunManifest)>, CliError> {
    let plan = config.validate()?;
    if jobs == 0 {
        return Err(CliError::Validation("jobs must be positive".into()));
    }
    let instances = config.instances()?;
    let opts = config.pipeline_options(&plan);
    let dir = &config.out;
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let hash = sha256_hex(&serde_json::to_vec(config).expect("configs serialize"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| instances.par_iter().map(|i| run_one(i, &plan, &opts, dir, &hash)).collect());
    results.into_iter().collect()
}
