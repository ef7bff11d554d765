//! Covering reduction from the interior estimate to a global bound on a
//! compactly contained region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{polygon_area, sym2, ConvexBody, PLConvexFunction};
use crate::sections::{dilate, safe_height, section};

use super::normalized::normalize_section;
use super::EstimateError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegPiece {
    pub center: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub norm: f64,
    pub det: f64,
    /// `‖T‖‖T*‖ / det T`.
    pub shape: f64,
    /// `∫_{T(S)/2} ‖D²v‖ log^{k+1}(2 + ‖D²v‖)` for each requested `k`.
    pub v_integrals: Vec<f64>,
    /// `(shape/det T)·Σ_{y ∈ S/2} ‖D²v(Ty)‖ (log(2 + shape) + log(2 + ‖D²v(Ty)‖))^k det T dy`.
    pub pulled_back: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegReport {
    pub rho: f64,
    pub ks: Vec<u32>,
    pub pieces: Vec<RegPiece>,
    pub r1: f64,
    pub r2: f64,
    /// `‖T_i‖ <= n/r₁` for every piece.
    pub norm_bound: bool,
    /// `det T_i >= 1/r₂ⁿ` for every piece.
    pub det_bound: bool,
    /// `∫_{Ω′} ‖D²u‖ log^k(2 + ‖D²u‖)` over the nodes of `Ω′`.
    pub lhs: Vec<f64>,
    /// `Σ_i ‖T_i‖‖T_i*‖/(det T_i)^{1+2/n} log(2 + ‖T_i‖‖T_i*‖/(det T_i)^{2/n}) J_i`.
    pub assembled: Vec<f64>,
    /// Sum of the pulled-back pieces; dominates `lhs` by the change of variables.
    pub pulled_back: Vec<f64>,
}

impl RegReport {
    pub fn n(&self) -> usize {
        self.pieces.len()
    }
}

/// Covers the nodes of `omega_prime` by half-sections `S(x, ρ)/2`, with `ρ`
/// the safe height of `omega_prime` inside `omega`, normalizes every piece
/// and assembles the covering bound for each `k`.
pub fn verify_reg_reduction(
    u: &PLConvexFunction,
    omega_prime: &ConvexBody,
    omega: &ConvexBody,
    ks: &[u32],
) -> Result<RegReport, EstimateError> {
    let rho = safe_height(u, omega_prime, omega)?;
    let grid = u.grid();
    let mut nodes = u.nodes_in(omega_prime, 0.0);
    if nodes.is_empty() {
        return Err(EstimateError::InvalidInput("the covered region holds no node".into()));
    }
    nodes.sort_by(|&a, &b| {
        let (pa, pb) = (grid.pos(a), grid.pos(b));
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });
    let mut halves: Vec<(usize, ConvexBody)> = Vec::new();
    for &x in &nodes {
        let p = grid.pos(x);
        if halves.iter().any(|(_, h)| h.contains(&p, 1e-12)) {
            continue;
        }
        let s = section(u, x, rho)?;
        let h = dilate(&s, 0.5).ok_or(EstimateError::DegenerateSection { node: x, height: rho })?;
        halves.push((x, h));
    }
    let areas = grid.dual_areas();
    let pieces: Vec<Result<RegPiece, EstimateError>> = halves.par_iter().map(|(x, h)| piece(u, *x, rho, h, &areas, ks)).collect();
    let pieces: Vec<RegPiece> = pieces.into_iter().collect::<Result<_, _>>()?;
    let r1 = pieces.iter().map(|p| p.inner_radius).fold(f64::INFINITY, f64::min);
    let r2 = pieces.iter().map(|p| p.outer_radius).fold(0.0, f64::max);
    if !(r1 > 0.0) {
        let worst = pieces.iter().min_by(|a, b| a.inner_radius.total_cmp(&b.inner_radius)).map_or(0, |p| p.center);
        return Err(EstimateError::ShapeDegeneracy { node: worst, r1 });
    }
    let n = 2.0;
    let norm_bound = pieces.iter().all(|p| p.norm <= n / r1 * (1.0 + 1e-9));
    let det_bound = pieces.iter().all(|p| p.det * r2 * r2 >= 1.0 - 1e-9);
    let lhs = ks
        .iter()
        .map(|&k| {
            nodes
                .iter()
                .filter_map(|&y| u.hessian_norm(y).map(|g| g * (2.0 + g).ln().powi(k as i32) * areas[y]))
                .sum()
        })
        .collect();
    let assembled = (0..ks.len())
        .map(|j| pieces.iter().map(|p| p.shape / p.det * (2.0 + p.shape).ln() * p.v_integrals[j]).sum())
        .collect();
    let pulled_back = (0..ks.len()).map(|j| pieces.iter().map(|p| p.pulled_back[j]).sum()).collect();
    Ok(RegReport { rho, ks: ks.to_vec(), pieces, r1, r2, norm_bound, det_bound, lhs, assembled, pulled_back })
}

fn piece(u: &PLConvexFunction, x: usize, rho: f64, half: &ConvexBody, areas: &[f64], ks: &[u32]) -> Result<RegPiece, EstimateError> {
    let nv = normalize_section(u, x, rho)?;
    let (norm, det, shape) = (nv.map.norm(), nv.map.det(), nv.shape_factor());
    let vg = nv.v.grid();
    let z_half = half.map(&nv.map);
    let reach = vg.lattice().window_radius(1);
    let ai = nv.map.linear_inverse();
    let ai = [[ai[(0, 0)], ai[(0, 1)]], [ai[(1, 0)], ai[(1, 1)]]];
    let mut v_integrals = vec![0.0; ks.len()];
    let mut pulled_back = vec![0.0; ks.len()];
    for (i, &y) in nv.source.iter().enumerate() {
        let z = vg.pos(i);
        if z_half.depth(&z) < -reach {
            continue;
        }
        // The fitted Hessian of v, or the transformation law where the
        // stencil leaves the support.
        let hv = match nv.v.hessian_norm(i) {
            Some(h) => h,
            None => match u.hessian(y) {
                Some(hu) => sym2::norm(sym2::congruence(hu.raw, ai)) * det,
                None => continue,
            },
        };
        let cell = vg.dual_cell(i, Some(&z_half));
        let a = if cell.len() < 3 { 0.0 } else { polygon_area(&cell) };
        let inside = half.contains(&u.grid().pos(y), 0.0);
        for (j, &k) in ks.iter().enumerate() {
            v_integrals[j] += hv * (2.0 + hv).ln().powi(k as i32 + 1) * a;
            if inside {
                pulled_back[j] += shape * hv * ((2.0 + shape).ln() + (2.0 + hv).ln()).powi(k as i32) * areas[y];
            }
        }
    }
    let s = &nv.section;
    Ok(RegPiece {
        center: x,
        inner_radius: s.inner_radius(),
        outer_radius: s.outer_radius(),
        norm,
        det,
        shape,
        v_integrals,
        pulled_back,
    })
}
