//! Damped Newton iteration on the interior values.
//!
//! The unknowns are the values at interior nodes; boundary nodes stay at 0.
//! The residual is `A_i(u) − μ_i` where `A_i` is the area of the
//! subdifferential cell. Its Jacobian is the weighted graph Laplacian of the
//! dual triangulation with weights `len_ij/|x_j − x_i|`, which is symmetric
//! and positive definite as long as every cell has positive area.

use serde::{Deserialize, Serialize};

use super::measure::{cell_areas, CellAreas};
use super::problem::{MAProblem, ProblemSpec};
use super::SolverError;
use crate::geometry::{certified_cell, Grid, PLConvexFunction, PLDocument};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Largest accepted relative mismatch `|A_i − μ_i| / μ_i`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Consecutive steps without progress before giving up.
    pub stall_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iterations: 400, stall_limit: 50 }
    }
}

/// Discrete Alexandrov solution.
#[derive(Debug, Clone)]
pub struct MASolution {
    pub u: PLConvexFunction,
    /// Max relative mismatch between cell areas and target masses.
    pub residual: f64,
    pub iterations: usize,
    pub lambda: f64,
    pub big_lambda: f64,
    pub problem: Option<ProblemSpec>,
}

/// Serialized solution: the function document plus solver metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionDocument {
    #[serde(flatten)]
    pub function: PLDocument,
    pub residual: f64,
    pub iterations: usize,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
}

impl MASolution {
    pub fn to_document(&self) -> SolutionDocument {
        SolutionDocument {
            function: self.u.to_document(),
            residual: self.residual,
            iterations: self.iterations,
            lambda: self.lambda,
            big_lambda: self.big_lambda,
            problem: self.problem.clone(),
        }
    }

    pub fn from_document(doc: &SolutionDocument) -> Result<Self, SolverError> {
        Ok(Self {
            u: PLConvexFunction::from_document(&doc.function)?,
            residual: doc.residual,
            iterations: doc.iterations,
            lambda: doc.lambda,
            big_lambda: doc.big_lambda,
            problem: doc.problem.clone(),
        })
    }
}

/// Solves with the tolerance stored in the problem.
pub fn solve(problem: &MAProblem) -> Result<MASolution, SolverError> {
    solve_with(problem, SolveOptions { tol: problem.spec.tol, ..SolveOptions::default() })
}

pub fn solve_with(problem: &MAProblem, opts: SolveOptions) -> Result<MASolution, SolverError> {
    let grid = problem.grid.as_ref();
    let n = grid.n_interior();
    let mu = &problem.mu;
    let total: f64 = mu.iter().sum();
    if !(total > 0.0) {
        return Err(SolverError::InfeasibleMass);
    }
    // Mass balance needs more than the per-node tolerance.
    let target = opts.tol.min(1e-9);

    let mut values = initial_guess(grid, total);
    let mut cur = cell_areas(grid, &values, true);
    let a_min = 0.5 * min(&cur.area).min(min(mu));
    let mut res_norm = mismatch_norm(&cur.area, mu);
    let mut stalls = 0;
    let mut iterations = 0;
    loop {
        let rel = relative_mismatch(&cur.area, mu);
        if rel <= target {
            break;
        }
        if iterations >= opts.max_iterations || stalls >= opts.stall_limit {
            if rel <= opts.tol {
                break;
            }
            return Err(SolverError::NoConvergence { iterations, residual: rel });
        }
        iterations += 1;
        let rhs: Vec<f64> = cur.area.iter().zip(mu).map(|(a, m)| a - m).collect();
        let delta = newton_direction(n, &cur, &rhs);
        let mut accepted = None;
        let mut s = 1.0;
        for _ in 0..=30 {
            let mut trial = values.clone();
            for i in 0..n {
                trial[i] += s * delta[i];
            }
            let areas = cell_areas(grid, &trial, false).area;
            let norm = mismatch_norm(&areas, mu);
            if min(&areas) >= a_min && norm <= (1.0 - 0.5 * s) * res_norm {
                accepted = Some(trial);
                break;
            }
            s *= 0.5;
        }
        match accepted {
            Some(trial) => {
                values = trial;
                if s < 1.0 / 1024.0 {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
            }
            None => {
                if rel <= opts.tol {
                    // Round-off floor: no step improves the residual.
                    break;
                }
                stalls += 1;
                lifting_sweep(grid, &mut values, mu);
            }
        }
        cur = cell_areas(grid, &values, true);
        res_norm = mismatch_norm(&cur.area, mu);
    }
    let residual = relative_mismatch(&cur.area, mu);
    let u = PLConvexFunction::new(problem.grid.clone(), values)?;
    Ok(MASolution {
        u,
        residual,
        iterations,
        lambda: problem.lambda,
        big_lambda: problem.big_lambda,
        problem: Some(problem.spec.clone()),
    })
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn mismatch_norm(a: &[f64], mu: &[f64]) -> f64 {
    a.iter().zip(mu).map(|(a, m)| (a - m) * (a - m)).sum::<f64>().sqrt()
}

fn relative_mismatch(a: &[f64], mu: &[f64]) -> f64 {
    a.iter().zip(mu).map(|(a, m)| (a - m).abs() / m).fold(0.0, f64::max)
}

/// Paraboloid `c(|x − x̄|² − R²)` with `R` reaching the farthest boundary
/// node, scaled so the total cell area equals the total mass.
fn initial_guess(grid: &Grid, total: f64) -> Vec<f64> {
    let n = grid.n_interior();
    let mut xbar = [0.0; 2];
    for i in grid.interior_nodes() {
        let p = grid.pos(i);
        xbar[0] += p[0] / n as f64;
        xbar[1] += p[1] / n as f64;
    }
    let d2 = |p: [f64; 2]| (p[0] - xbar[0]).powi(2) + (p[1] - xbar[1]).powi(2);
    let r2 = grid.boundary_nodes().map(|b| d2(grid.pos(b))).fold(0.0, f64::max);
    let mut values = vec![0.0; grid.len()];
    for i in grid.interior_nodes() {
        values[i] = d2(grid.pos(i)) - r2;
    }
    // Cell areas scale with c² in the plane.
    let a1: f64 = cell_areas(grid, &values, false).area.iter().sum();
    let c = (total / a1).sqrt();
    for v in values.iter_mut() {
        *v *= c;
    }
    values
}

/// Solves `L δ = A − μ` for the symmetrized Jacobian by preconditioned CG.
fn newton_direction(n: usize, cur: &CellAreas, rhs: &[f64]) -> Vec<f64> {
    let mut diag = vec![0.0; n];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, c) in &cur.faces[i] {
            diag[i] += c;
            let j = j as usize;
            if j < n {
                rows[i].push((j, -0.5 * c));
                rows[j].push((i, -0.5 * c));
            }
        }
    }
    for d in diag.iter_mut() {
        if *d <= 0.0 {
            *d = 1.0;
        }
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            let mut s = diag[i] * x[i];
            for &(j, c) in &rows[i] {
                s += c * x[j];
            }
            y[i] = s;
        }
    };
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let stop = 1e-13 * rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..10 * n.max(10) {
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= stop {
            break;
        }
        apply(&p, &mut q);
        let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if pq <= 0.0 {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// One Gauss–Seidel sweep: each interior value is moved, with its neighbors
/// frozen, until its own cell area equals its target.
fn lifting_sweep(grid: &Grid, values: &mut [f64], mu: &[f64]) {
    let mut scratch = Vec::new();
    let h = grid.step();
    for i in grid.interior_nodes() {
        let area_at = |values: &mut [f64], v: f64, scratch: &mut Vec<usize>| {
            let old = values[i];
            values[i] = v;
            let a = certified_cell(grid, values, i, 0.0, scratch).0.area();
            values[i] = old;
            a
        };
        let u0 = values[i];
        let step = mu[i].sqrt() * h + 1e-12;
        // The area decreases as the value rises.
        let (mut lo, mut hi) = (u0, u0);
        let mut w = step;
        while area_at(values, lo, &mut scratch) < mu[i] {
            lo -= w;
            w *= 2.0;
        }
        w = step;
        while area_at(values, hi, &mut scratch) > mu[i] {
            hi += w;
            w *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if area_at(values, mid, &mut scratch) > mu[i] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        values[i] = 0.5 * (lo + hi);
    }
}
