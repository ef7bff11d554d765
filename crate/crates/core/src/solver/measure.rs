//! Monge–Ampère measure of piecewise-linear functions.

use rayon::prelude::*;

use crate::geometry::cell::BOX;
use crate::geometry::{certified_cell, GeometryError, Grid, PLConvexFunction};

/// Area of the subdifferential cell of every interior node together with
/// the face coefficients `len_ij / |x_j − x_i|`, which are the derivatives
/// `∂A_i/∂u_j` for neighbors `j`.
#[derive(Debug, Clone)]
pub(crate) struct CellAreas {
    pub area: Vec<f64>,
    pub faces: Vec<Vec<(u32, f64)>>,
}

pub(crate) fn cell_areas(grid: &Grid, values: &[f64], with_faces: bool) -> CellAreas {
    let per: Vec<(f64, Vec<(u32, f64)>)> = grid
        .interior_nodes()
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let (cell, _) = certified_cell(grid, values, i, 0.0, scratch);
            let area = cell.area();
            let mut faces = Vec::new();
            if with_faces && area > 0.0 {
                let x = grid.pos(i);
                for (k, &l) in cell.labels.iter().enumerate() {
                    if l == BOX {
                        continue;
                    }
                    let y = grid.pos(l as usize);
                    faces.push((l, cell.edge_length(k) / (y[0] - x[0]).hypot(y[1] - x[1])));
                }
            }
            (area, faces)
        })
        .collect();
    let (area, faces) = per.into_iter().unzip();
    CellAreas { area, faces }
}

/// `|∂u(B)|`: total area of the subdifferential cells of the interior nodes
/// in `nodes`. Cells of a convex function overlap only on edges.
pub fn ma_measure(u: &PLConvexFunction, nodes: &[usize]) -> Result<f64, GeometryError> {
    let grid = u.grid();
    if let Some(&node) = u.nonconvex_nodes().first() {
        return Err(GeometryError::NonConvexInput { node });
    }
    let mut total = 0.0;
    for &i in nodes {
        if grid.is_boundary(i) {
            return Err(GeometryError::Malformed(format!("node {i} is a boundary node")));
        }
        total += u.cell(i).area();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexBody;
    use std::sync::Arc;

    fn square_grid(h: f64) -> Arc<Grid> {
        let sq = ConvexBody::polygon(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        Arc::new(Grid::on_domain(&sq, h).unwrap())
    }

    #[test]
    fn quadratic_cell_is_lattice_square() {
        let h = 0.125;
        let g = square_grid(h);
        let u = PLConvexFunction::from_fn(g.clone(), |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        let c = g.node_at(0, 0).unwrap();
        assert!((ma_measure(&u, &[c]).unwrap() - h * h).abs() < 1e-15);
    }

    #[test]
    fn affine_function_has_no_mass() {
        let g = square_grid(0.125);
        let u = PLConvexFunction::from_fn(g.clone(), |p| 0.3 * p[0] - 2.0 * p[1] + 1.0).unwrap();
        let all: Vec<usize> = g.interior_nodes().collect();
        assert!(ma_measure(&u, &all).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cone_apex_carries_the_slope_ball() {
        let g = square_grid(0.125);
        let u = PLConvexFunction::from_fn(g.clone(), |p| p[0].abs().max(p[1].abs())).unwrap();
        let c = g.node_at(0, 0).unwrap();
        // Subdifferential of the max-norm cone is the l1 unit ball, area 2.
        assert!((ma_measure(&u, &[c]).unwrap() - 2.0).abs() < 1e-12);
        let rest: Vec<usize> = g.interior_nodes().filter(|&i| i != c).collect();
        assert!(ma_measure(&u, &rest).unwrap().abs() < 1e-12);
    }

    #[test]
    fn nonconvex_input_is_rejected() {
        let g = square_grid(0.125);
        let u = PLConvexFunction::from_fn(g.clone(), |p| -(p[0] * p[0])).unwrap();
        assert!(matches!(ma_measure(&u, &[0]), Err(GeometryError::NonConvexInput { .. })));
    }

    #[test]
    fn face_coefficients_are_area_derivatives() {
        let g = square_grid(0.25);
        let mut v: Vec<f64> = g.positions().iter().map(|p| p[0] * p[0] + 0.7 * p[1] * p[1] + 0.2 * p[0] * p[1] - 2.0).collect();
        for b in g.boundary_nodes() {
            v[b] = 0.0;
        }
        let base = cell_areas(&g, &v, true);
        let i = g.node_at(1, 0).unwrap();
        for &(j, coef) in &base.faces[i] {
            let j = j as usize;
            let eps = 1e-7;
            let mut w = v.clone();
            w[j] += eps;
            let fd = (cell_areas(&g, &w, false).area[i] - base.area[i]) / eps;
            assert!((fd - coef).abs() <= 1e-5 * (1.0 + coef), "{fd} vs {coef}");
        }
    }
}
