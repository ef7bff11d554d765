//! Closed-form solutions used as oracles.

use std::sync::Arc;

use super::newton::MASolution;
use super::problem::{DensitySpec, DomainSpec, MAProblem, ProblemSpec};
use super::SolverError;
use crate::geometry::sym2::Sym2;
use crate::geometry::PLConvexFunction;

/// A closed-form solution `u(x) = ½ xᵀHx − ½ c₀` on its zero sublevel set,
/// sampled on the grid of the matching problem.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub problem: MAProblem,
    pub solution: MASolution,
    pub hessian: Sym2,
    pub density: f64,
    pub offset: f64,
}

impl CatalogEntry {
    pub fn exact(&self, x: [f64; 2]) -> f64 {
        let h = self.hessian;
        0.5 * (h[0] * x[0] * x[0] + 2.0 * h[1] * x[0] * x[1] + h[2] * x[1] * x[1] - self.offset)
    }
}

/// Parses `name` or `name(param)`.
fn parse(name: &str) -> Result<(&str, Option<f64>), SolverError> {
    let name = name.trim();
    match name.split_once('(') {
        None => Ok((name, None)),
        Some((base, rest)) => {
            let arg = rest
                .strip_suffix(')')
                .and_then(|a| a.trim().parse::<f64>().ok())
                .ok_or_else(|| SolverError::UnknownName(name.to_string()))?;
            Ok((base.trim(), Some(arg)))
        }
    }
}

/// The domain, Hessian and offset of a catalog entry.
pub fn catalog_shape(name: &str) -> Result<(DomainSpec, Sym2, f64), SolverError> {
    let (base, arg) = parse(name)?;
    let positive = |v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(SolverError::InvalidProblem(format!("parameter of {name} must be positive")))
        }
    };
    match base {
        "quadratic_disc" if arg.is_none() => Ok((DomainSpec::unit_disc(), [1.0, 0.0, 1.0], 1.0)),
        "scaled_quadratic" => {
            let c = positive(arg.unwrap_or(2.0))?;
            Ok((DomainSpec::unit_disc(), [c, 0.0, c], c))
        }
        "anisotropic_quadratic" => {
            let a = positive(arg.unwrap_or(4.0))?;
            let axes = [1.0 / a.sqrt(), a.sqrt()];
            Ok((DomainSpec::Ellipse { center: [0.0, 0.0], axes }, [a, 0.0, 1.0 / a], 1.0))
        }
        _ => Err(SolverError::UnknownName(name.to_string())),
    }
}

/// Exact nodal sampling of a closed-form solution at grid step `h`.
///
/// Names: `quadratic_disc`, `scaled_quadratic(c)` (default `c = 2`) and
/// `anisotropic_quadratic(a)` (default `a = 4`).
pub fn analytic_catalog(name: &str, h: f64) -> Result<CatalogEntry, SolverError> {
    let (domain, hessian, offset) = catalog_shape(name)?;
    let density = hessian[0] * hessian[2] - hessian[1] * hessian[1];
    let spec = ProblemSpec { domain, f: DensitySpec::constant(density), grid: h, tol: 1e-6 };
    let problem = MAProblem::new(spec)?;
    let mut entry = CatalogEntry {
        name: name.to_string(),
        solution: MASolution {
            u: PLConvexFunction::new(Arc::clone(&problem.grid), vec![0.0; problem.grid.len()])?,
            residual: 0.0,
            iterations: 0,
            lambda: density,
            big_lambda: density,
            problem: Some(problem.spec.clone()),
        },
        problem,
        hessian,
        density,
        offset,
    };
    let grid = Arc::clone(&entry.problem.grid);
    let values: Vec<f64> =
        (0..grid.len()).map(|i| if grid.is_boundary(i) { 0.0 } else { entry.exact(grid.pos(i)) }).collect();
    entry.solution.u = PLConvexFunction::new(grid, values)?;
    let areas: Vec<f64> = entry.problem.grid.interior_nodes().map(|i| entry.solution.u.cell(i).area()).collect();
    entry.solution.residual =
        areas.iter().zip(&entry.problem.mu).map(|(a, m)| (a - m).abs() / m).fold(0.0, f64::max);
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert!(analytic_catalog("quadratic_disc", 0.1).is_ok());
        assert!(matches!(analytic_catalog("cubic", 0.1), Err(SolverError::UnknownName(_))));
        assert!(matches!(analytic_catalog("scaled_quadratic(x)", 0.1), Err(SolverError::UnknownName(_))));
        let e = analytic_catalog("scaled_quadratic(3)", 0.1).unwrap();
        assert_eq!(e.density, 9.0);
        let e = analytic_catalog("anisotropic_quadratic(4)", 0.1).unwrap();
        assert!((e.density - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interior_cells_match_density() {
        // Away from the boundary the sampled quadratic has lattice-square
        // cells, which carry exactly the target mass.
        let e = analytic_catalog("scaled_quadratic(2)", 0.1).unwrap();
        let g = &e.problem.grid;
        let u = &e.solution.u;
        let mut checked = 0;
        for i in g.interior_nodes() {
            if g.has_full_stencil(i, 3) && g.domain().depth(&g.pos(i)) > 0.5 {
                let m = e.problem.mu[i];
                assert!((u.cell(i).area() - m).abs() <= 1e-12, "{} {}", u.cell(i).area(), m);
                checked += 1;
            }
        }
        assert!(checked > 20);
        assert!(u.values().iter().all(|&v| v <= 0.0));
    }
}
