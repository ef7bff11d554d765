//! Normalized solutions `v(z) = det T·[u(T⁻¹z) − u(x) − p·(T⁻¹z − x) − t]`
//! on `Z = T(S(x, t))`, where `T` normalizes `S(x, t)`.

use std::sync::Arc;

use crate::geometry::{john_normalize, sym2, AffineMap, ConvexBody, Grid, PLConvexFunction};
use crate::sections::{section, Section};

use super::EstimateError;

#[derive(Debug, Clone)]
pub struct NormalizedSolution {
    pub center: usize,
    pub height: f64,
    /// `v` lives on `T(S(x, extent·t))`.
    pub extent: f64,
    pub map: AffineMap,
    /// `S(x, t)`, the normalized section.
    pub section: Section,
    /// `S(x, extent·t)`, the support of `v`.
    pub support: Section,
    pub v: PLConvexFunction,
    /// Source node of each interior node of `v`.
    pub source: Vec<usize>,
    /// Source nodes' excess `g`, parallel to `source`.
    pub excess: Vec<f64>,
    /// `min v = −t·det T`, attained at `T(x)`.
    pub inf_v: f64,
    /// Value of `v` on the boundary of its support.
    pub boundary_value: f64,
}

/// `v` on `Z = T(S(x, t))`, equal to 0 on `∂Z`.
pub fn normalize_section(u: &PLConvexFunction, x: usize, t: f64) -> Result<NormalizedSolution, EstimateError> {
    normalize_section_on(u, x, t, 1.0)
}

/// `v` for the normalization of `S(x, t)`, sampled on `T(S(x, extent·t))`
/// where it equals `(extent − 1)·t·det T` on the boundary.
pub fn normalize_section_on(u: &PLConvexFunction, x: usize, t: f64, extent: f64) -> Result<NormalizedSolution, EstimateError> {
    if !(t > 0.0) || !(extent >= 1.0) {
        return Err(EstimateError::InvalidInput(format!("height {t}, extent {extent}")));
    }
    let s = section(u, x, t)?;
    let region = s.region.as_ref().ok_or(EstimateError::DegenerateSection { node: x, height: t })?;
    let map = john_normalize(region)?;
    let support = if extent == 1.0 { s.clone() } else { section(u, x, extent * t)? };
    let outer = support.region.as_ref().ok_or(EstimateError::DegenerateSection { node: x, height: extent * t })?;
    let z_body = outer.map(&map);
    let grid = u.grid();
    let lattice = grid.lattice().mapped(&map);
    let det = map.det();
    let (ux, p) = (u.value(x), s.slope);
    let mut ij = Vec::new();
    let mut source = Vec::new();
    let mut excess = Vec::new();
    let margin = 0.1 * lattice.step();
    for &(n, g) in &support.nodes {
        if z_body.depth(&map.apply2(grid.pos(n))) >= margin {
            ij.push(grid.ij(n));
            source.push(n);
            excess.push(g);
        }
    }
    let boundary: Vec<[f64; 2]> = support.boundary_points().iter().map(|q| map.apply2(*q)).collect();
    let boundary_value = (extent - 1.0) * t * det;
    let vg = Arc::new(Grid::from_parts(lattice, ij, boundary, z_body)?);
    let mut values: Vec<f64> = source
        .iter()
        .map(|&n| {
            let y = grid.pos(n);
            det * (u.value(n) - ux - p[0] * (y[0] - s.x[0]) - p[1] * (y[1] - s.x[1]) - t)
        })
        .collect();
    values.resize(vg.len(), boundary_value);
    let v = PLConvexFunction::new(vg, values)?;
    Ok(NormalizedSolution {
        center: x,
        height: t,
        extent,
        map,
        section: s,
        support,
        v,
        source,
        excess,
        inf_v: -t * det,
        boundary_value,
    })
}

impl NormalizedSolution {
    /// `T` as a row-major 2×2 matrix and its inverse.
    fn linear(&self) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
        let (a, ai) = (self.map.linear(), self.map.linear_inverse());
        ([[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]], [[ai[(0, 0)], ai[(0, 1)]], [ai[(1, 0)], ai[(1, 1)]]])
    }

    /// `‖T‖‖T*‖ / det T`.
    pub fn shape_factor(&self) -> f64 {
        self.map.norm() * self.map.norm_adjoint() / self.map.det()
    }

    /// Largest relative deviation between `D²v(Ty)` and
    /// `det T·T^{-*} D²u(y) T^{-1}` over nodes where both are fitted.
    pub fn transformation_law_deviation(&self, u: &PLConvexFunction) -> Option<f64> {
        let (_, ai) = self.linear();
        let det = self.map.det();
        let mut worst: Option<f64> = None;
        for (i, &n) in self.source.iter().enumerate() {
            let (Some(hv), Some(hu)) = (self.v.hessian(i), u.hessian(n)) else { continue };
            let pred = sym2::congruence(hu.raw, ai).map(|c| c * det);
            let diff = [hv.raw[0] - pred[0], hv.raw[1] - pred[1], hv.raw[2] - pred[2]];
            let scale = sym2::norm(pred).max(1e-300);
            let d = sym2::norm(diff) / scale;
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
        worst
    }

    /// `max |∇v|` over nodes of `T(S(x, t))`.
    pub fn gradient_bound(&self) -> f64 {
        self.source
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.excess[i] <= self.height)
            .map(|(i, _)| {
                let g = self.v.gradient(i);
                g[0].hypot(g[1])
            })
            .filter(|g| g.is_finite())
            .fold(0.0, f64::max)
    }

    /// `Z = T(S(x, t))`.
    pub fn z_body(&self) -> ConvexBody {
        self.section.region.as_ref().expect("normalized sections have interior").map(&self.map)
    }

    /// `D²v` at interior node `i`: the fitted Hessian of `v`, or the
    /// transformation law applied to `D²u` where the stencil leaves the
    /// support.
    pub fn hessian_v(&self, u: &PLConvexFunction, i: usize) -> Option<sym2::Sym2> {
        if let Some(h) = self.v.hessian(i) {
            return Some(h.raw);
        }
        let (_, ai) = self.linear();
        let hu = u.hessian(*self.source.get(i)?)?;
        Some(sym2::congruence(hu.raw, ai).map(|c| c * self.map.det()))
    }

    /// `(∫_Z Δv, ∮_{∂Z} ∇v·ν)`: the Laplacian integrated over clipped dual
    /// cells against the flux of the interpolant's gradient. `None` when a
    /// node meeting `Z` has no Hessian.
    pub fn divergence_pair(&self, u: &PLConvexFunction) -> Option<(f64, f64)> {
        let z = self.z_body();
        let grid = self.v.grid();
        let mut interior = 0.0;
        let reach = 2.0 * grid.lattice().window_radius(1);
        for i in grid.interior_nodes() {
            if z.depth(&grid.pos(i)) < -reach {
                continue;
            }
            let cell = grid.dual_cell(i, Some(&z));
            let a = crate::geometry::polygon_area(&cell);
            if a <= 0.0 {
                continue;
            }
            let h = self.hessian_v(u, i)?;
            interior += (h[0] + h[2]) * a;
        }
        let verts = z.vertices_2d();
        let mut flux = 0.0;
        const GAUSS: usize = 8;
        for k in 0..verts.len() {
            let (a, b) = (verts[k], verts[(k + 1) % verts.len()]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            // Counter-clockwise boundary: outward normal times length.
            let nl = [dy, -dx];
            for m in 0..GAUSS {
                let s = (m as f64 + 0.5) / GAUSS as f64;
                let q = [a[0] + s * dx, a[1] + s * dy];
                let g = self.v.interpolated_gradient(q)?;
                flux += (g[0] * nl[0] + g[1] * nl[1]) / GAUSS as f64;
            }
        }
        Some((interior, flux))
    }
}
