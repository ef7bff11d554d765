//! Piecewise-linear convex functions on a [`Grid`].
//!
//! Values live on nodes. The subdifferential at an interior node is computed
//! exactly as a slope-space polygon from a local stencil that is enlarged
//! until no defining neighbor sits on its rim. The facets of the lower convex
//! hull are read off the cell vertices and indexed for point evaluation.

use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cell::{Cell, BOX};
use super::grid::{Grid, Lattice};
use super::sym2::{self, Sym2};
use super::{ConvexBody, GeometryError};

/// Tolerance of the discrete convexity test.
pub const CONVEXITY_TOL: f64 = 1e-8;

const START_RADIUS: i32 = 3;
const MAX_RADIUS: i32 = 15;

/// Subdifferential polygon of `node` from the stencil of lattice radius `r`.
/// Constraints are visited nearest first.
pub fn stencil_cell(grid: &Grid, values: &[f64], node: usize, r: i32, relax: f64, scratch: &mut Vec<usize>) -> Cell {
    grid.neighbors(node, r, scratch);
    let x = grid.pos(node);
    let u = values[node];
    let mut cons: Vec<(f64, [f64; 2], f64, u32)> = scratch
        .iter()
        .map(|&j| {
            let p = grid.pos(j);
            let d = [p[0] - x[0], p[1] - x[1]];
            (d[0] * d[0] + d[1] * d[1], d, values[j] - u, j as u32)
        })
        .collect();
    cons.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.3.cmp(&b.3)));
    let slope = cons.iter().map(|c| c.2.abs() / c.0.sqrt()).fold(0.0, f64::max);
    let half = 4.0 * slope + 1e-9 * (1.0 + slope);
    let mut cell = Cell::boxed([0.0, 0.0], half);
    for (_, d, rhs, j) in cons {
        cell.clip(d, rhs + relax, j);
        if cell.is_empty() {
            break;
        }
    }
    cell
}

/// Cell from a stencil grown until every defining neighbor lies strictly
/// inside it. Returns the cell and the radius used.
pub fn certified_cell(grid: &Grid, values: &[f64], node: usize, relax: f64, scratch: &mut Vec<usize>) -> (Cell, i32) {
    let mut r = START_RADIUS;
    loop {
        let cell = stencil_cell(grid, values, node, r, relax, scratch);
        let far = cell
            .labels
            .iter()
            .filter(|&&l| l != BOX)
            .map(|&l| grid.lattice_distance(node, l as usize))
            .fold(0.0, f64::max);
        let rim = cell.labels.iter().any(|&l| l == BOX);
        if (far <= (r - 1) as f64 && !rim) || r >= MAX_RADIUS {
            return (cell, r);
        }
        r += 3;
    }
}

/// Least-squares quadratic fit weights on the radius-2 lattice stencil.
#[derive(Debug, Clone)]
pub struct HessianStencil {
    /// Rows for `h11`, `h12`, `h22`; columns follow `(di, dj)` row-major over `[-2, 2]²`.
    weights: [[f64; 25]; 3],
}

impl HessianStencil {
    pub fn new(lattice: &Lattice) -> Self {
        let mut x = DMatrix::<f64>::zeros(25, 6);
        let mut row = 0;
        for di in -2..=2 {
            for dj in -2..=2 {
                let d = lattice.offset(di, dj);
                let vals = [1.0, d[0], d[1], 0.5 * d[0] * d[0], d[0] * d[1], 0.5 * d[1] * d[1]];
                for (c, v) in vals.iter().enumerate() {
                    x[(row, c)] = *v;
                }
                row += 1;
            }
        }
        let xt = x.transpose();
        let normal = &xt * &x;
        let inv = normal.try_inverse().expect("stencil spans quadratics");
        let w = inv * xt;
        let mut weights = [[0.0; 25]; 3];
        for k in 0..3 {
            for c in 0..25 {
                weights[k][c] = w[(3 + k, c)];
            }
        }
        Self { weights }
    }

    /// Raw fitted Hessian at an interior node, or `None` when the stencil
    /// is incomplete.
    pub fn fit(&self, grid: &Grid, values: &[f64], node: usize) -> Option<Sym2> {
        let [i, j] = grid.ij(node);
        let mut h = [0.0; 3];
        let mut c = 0;
        for di in -2..=2 {
            for dj in -2..=2 {
                let n = grid.node_at(i + di, j + dj)?;
                for k in 0..3 {
                    h[k] += self.weights[k][c] * values[n];
                }
                c += 1;
            }
        }
        Some(h)
    }
}

/// Fitted Hessian at a node with its projection on the PSD cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianFit {
    pub raw: Sym2,
    pub min_eig_raw: f64,
    pub psd: Sym2,
    /// Operator norm of the projected Hessian (its largest eigenvalue).
    pub norm: f64,
    pub laplacian: f64,
}

impl HessianFit {
    pub fn from_raw(raw: Sym2) -> Self {
        let [lo, _] = sym2::eigenvalues(raw);
        let psd = sym2::psd_projection(raw);
        let [_, hi] = sym2::eigenvalues(psd);
        Self { raw, min_eig_raw: lo, psd, norm: hi.max(0.0), laplacian: psd[0] + psd[2] }
    }
}

/// A linear piece of the function: `ℓ(y) = offset + slope·y` on a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub nodes: [u32; 3],
    pub slope: [f64; 2],
    pub offset: f64,
}

#[derive(Debug, Clone)]
struct FacetIndex {
    lo: [i32; 2],
    dims: [usize; 2],
    cells: Vec<Vec<u32>>,
}

#[derive(Debug, Clone)]
pub struct PLConvexFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    cells: Vec<Cell>,
    radii: Vec<i32>,
    gradients: Vec<[f64; 2]>,
    hessians: Vec<Option<HessianFit>>,
    facets: Vec<Facet>,
    index: FacetIndex,
    nonconvex: Vec<usize>,
}

impl PLConvexFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != grid.len() {
            return Err(GeometryError::Malformed(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Malformed("non-finite value".into()));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let relax = CONVEXITY_TOL * (1.0 + scale);
        let tilted = tilted_values(&grid, &values, scale);
        let per_node: Vec<(Cell, i32, Cell, [f64; 2], bool)> = grid
            .interior_nodes()
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| {
                let (cell, r) = certified_cell(&grid, &values, i, 0.0, scratch);
                let (tcell, _) = certified_cell(&grid, &tilted, i, 0.0, scratch);
                if !cell.is_empty() {
                    let g = cell.centroid();
                    return (cell, r, tcell, g, false);
                }
                // Zero-area cells: a slope from the tilted cell, convexity
                // from the relaxed one.
                let (relaxed, _) = certified_cell(&grid, &values, i, relax, scratch);
                let g = if tcell.is_empty() {
                    if relaxed.is_empty() {
                        [f64::NAN; 2]
                    } else {
                        relaxed.centroid()
                    }
                } else {
                    let c = tcell.centroid();
                    let t = tilt_gradient(&grid, scale, grid.pos(i));
                    [c[0] - t[0], c[1] - t[1]]
                };
                (cell, r, tcell, g, relaxed.is_empty())
            })
            .collect();
        let mut cells = Vec::with_capacity(per_node.len());
        let mut tilted_cells = Vec::with_capacity(per_node.len());
        let mut radii = Vec::with_capacity(per_node.len());
        let mut gradients = Vec::with_capacity(per_node.len());
        let mut nonconvex = Vec::new();
        for (i, (c, r, tc, g, bad)) in per_node.into_iter().enumerate() {
            if bad {
                nonconvex.push(i);
            }
            cells.push(c);
            tilted_cells.push(tc);
            radii.push(r);
            gradients.push(g);
        }
        let stencil = HessianStencil::new(grid.lattice());
        let hessians: Vec<Option<HessianFit>> = grid
            .interior_nodes()
            .into_par_iter()
            .map(|i| stencil.fit(&grid, &values, i).map(HessianFit::from_raw))
            .collect();
        let facets = collect_facets(&grid, &values, &tilted_cells);
        let index = build_index(&grid, &facets);
        Ok(Self { grid, values, cells, radii, gradients, hessians, facets, index, nonconvex })
    }

    /// Samples `f` at every node of `grid`.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self, GeometryError> {
        let values = grid.positions().iter().map(|&p| f(p)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn domain(&self) -> &ConvexBody {
        self.grid.domain()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    /// Subdifferential cell of an interior node.
    pub fn cell(&self, node: usize) -> &Cell {
        &self.cells[node]
    }

    pub fn stencil_radius(&self, node: usize) -> i32 {
        self.radii[node]
    }

    /// Centroid of the subdifferential cell: a subgradient at the node.
    pub fn gradient(&self, node: usize) -> [f64; 2] {
        self.gradients[node]
    }

    pub fn hessian(&self, node: usize) -> Option<&HessianFit> {
        self.hessians.get(node).and_then(|h| h.as_ref())
    }

    /// Discrete Hessian at an interior node with a full radius-2 stencil.
    pub fn discrete_hessian(&self, node: usize) -> Result<HessianFit, GeometryError> {
        self.hessian(node).copied().ok_or(GeometryError::BoundaryStencil { node })
    }

    /// `‖D²u‖` where the stencil is complete.
    pub fn hessian_norm(&self, node: usize) -> Option<f64> {
        self.hessian(node).map(|h| h.norm)
    }

    /// Interior nodes whose lower hull misses the node by more than the
    /// convexity tolerance.
    pub fn nonconvex_nodes(&self) -> &[usize] {
        &self.nonconvex
    }

    /// Nodes whose pre-projection Hessian has an eigenvalue below `-1e-8`.
    pub fn hessian_diagnostics(&self) -> Vec<(usize, f64)> {
        self.hessians
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.filter(|h| h.min_eig_raw < -1e-8).map(|h| (i, h.min_eig_raw)))
            .collect()
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// The facet containing `y`, with barycentric coordinates.
    pub fn locate(&self, y: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let c = self.grid.lattice().coords(y);
        let (a, b) = (c[0].floor() as i32 - self.index.lo[0], c[1].floor() as i32 - self.index.lo[1]);
        if a < 0 || b < 0 || a as usize >= self.index.dims[0] || b as usize >= self.index.dims[1] {
            return None;
        }
        let list = &self.index.cells[a as usize * self.index.dims[1] + b as usize];
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &f in list {
            let fct = &self.facets[f as usize];
            let bc = barycentric(
                [self.grid.pos(fct.nodes[0] as usize), self.grid.pos(fct.nodes[1] as usize), self.grid.pos(fct.nodes[2] as usize)],
                y,
            );
            let worst = bc[0].min(bc[1]).min(bc[2]);
            if worst >= 0.0 {
                return Some((f as usize, bc));
            }
            if best.map_or(true, |(_, _, w)| worst > w) {
                best = Some((f as usize, bc, worst));
            }
        }
        best.filter(|&(_, _, w)| w >= -1e-9).map(|(f, bc, _)| (f, bc))
    }

    /// Value of the piecewise-linear interpolant at `y`; `None` outside the
    /// triangulated region.
    pub fn eval(&self, y: [f64; 2]) -> Option<f64> {
        self.locate(y).map(|(f, _)| {
            let fct = &self.facets[f];
            fct.offset + fct.slope[0] * y[0] + fct.slope[1] * y[1]
        })
    }

    /// Barycentric interpolation of the nodal gradient field. Boundary
    /// vertices contribute the facet slope.
    pub fn interpolated_gradient(&self, y: [f64; 2]) -> Option<[f64; 2]> {
        self.locate(y).map(|(f, bc)| {
            let fct = &self.facets[f];
            let mut g = [0.0; 2];
            for k in 0..3 {
                let n = fct.nodes[k] as usize;
                let gk = if self.grid.is_boundary(n) || self.gradients[n][0].is_nan() { fct.slope } else { self.gradients[n] };
                g[0] += bc[k] * gk[0];
                g[1] += bc[k] * gk[1];
            }
            g
        })
    }

    /// Interior nodes lying in `body`.
    pub fn nodes_in(&self, body: &ConvexBody, tol: f64) -> Vec<usize> {
        self.grid.interior_nodes().filter(|&i| body.contains(&self.grid.pos(i), tol)).collect()
    }

    pub fn to_document(&self) -> PLDocument {
        let g = &self.grid;
        PLDocument {
            schema: crate::SCHEMA.to_string(),
            dim: 2,
            vertices: g.domain().vertices_2d().into_iter().map(|v| v.to_vec()).collect(),
            grid: GridDoc {
                h: g.step(),
                nodes: g.positions().iter().map(|p| p.to_vec()).collect(),
                values: self.values.clone(),
                boundary: (0..g.len()).map(|i| g.is_boundary(i)).collect(),
                origin: g.lattice().origin,
                basis: g.lattice().basis,
                lattice_index: g.interior_nodes().map(|i| g.ij(i)).collect(),
            },
        }
    }

    pub fn from_document(doc: &PLDocument) -> Result<Self, GeometryError> {
        if doc.schema != crate::SCHEMA {
            return Err(GeometryError::Malformed(format!("schema {} is not {}", doc.schema, crate::SCHEMA)));
        }
        if doc.dim != 2 {
            return Err(GeometryError::Malformed("only planar functions are stored".into()));
        }
        let verts: Vec<[f64; 2]> = doc
            .vertices
            .iter()
            .map(|v| if v.len() == 2 { Ok([v[0], v[1]]) } else { Err(GeometryError::Malformed("vertex arity".into())) })
            .collect::<Result<_, _>>()?;
        let domain = ConvexBody::polygon(&verts)?;
        let gd = &doc.grid;
        let n = gd.nodes.len();
        if gd.values.len() != n || gd.boundary.len() != n {
            return Err(GeometryError::Malformed("grid arrays differ in length".into()));
        }
        let lattice = Lattice { origin: gd.origin, basis: gd.basis };
        let interior: Vec<usize> = (0..n).filter(|&i| !gd.boundary[i]).collect();
        if interior.len() != gd.lattice_index.len() || interior.iter().enumerate().any(|(k, &i)| k != i) {
            return Err(GeometryError::Malformed("interior nodes must precede boundary nodes".into()));
        }
        let boundary: Vec<[f64; 2]> =
            (interior.len()..n).map(|i| gd.nodes[i].as_slice().try_into().map_err(|_| GeometryError::Malformed("node arity".into()))).collect::<Result<_, _>>()?;
        let grid = Grid::from_parts(lattice, gd.lattice_index.clone(), boundary, domain)?;
        Self::new(Arc::new(grid), gd.values.clone())
    }
}

/// Small strictly convex quadratic with a cross term, added to the values
/// before extracting facets. It resolves coplanar lifted points (affine
/// pieces, lattice squares) into a triangulation without moving any
/// non-degenerate facet.
const TILT: [f64; 3] = [1.0, 0.3, 1.2];

fn tilt_weight(grid: &Grid, scale: f64) -> f64 {
    let d = grid.domain();
    let diam = 2.0 * d.max_distance_from(&d.centroid_of_vertices());
    1e-10 * (1.0 + scale) / (diam * diam)
}

fn tilted_values(grid: &Grid, values: &[f64], scale: f64) -> Vec<f64> {
    let eps = tilt_weight(grid, scale);
    let c = grid.domain().centroid_of_vertices();
    values
        .iter()
        .zip(grid.positions())
        .map(|(v, p)| {
            let (x, y) = (p[0] - c[0], p[1] - c[1]);
            v + eps * (TILT[0] * x * x + 2.0 * TILT[1] * x * y + TILT[2] * y * y)
        })
        .collect()
}

fn tilt_gradient(grid: &Grid, scale: f64, p: [f64; 2]) -> [f64; 2] {
    let eps = tilt_weight(grid, scale);
    let c = grid.domain().centroid_of_vertices();
    let (x, y) = (p[0] - c[0], p[1] - c[1]);
    [2.0 * eps * (TILT[0] * x + TILT[1] * y), 2.0 * eps * (TILT[1] * x + TILT[2] * y)]
}

fn barycentric(t: [[f64; 2]; 3], y: [f64; 2]) -> [f64; 3] {
    let d = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]);
    let l1 = ((t[2][0] - y[0]) * (t[0][1] - y[1]) - (t[0][0] - y[0]) * (t[2][1] - y[1])) / d;
    let l2 = ((t[0][0] - y[0]) * (t[1][1] - y[1]) - (t[1][0] - y[0]) * (t[0][1] - y[1])) / d;
    [1.0 - l1 - l2, l1, l2]
}

fn collect_facets(grid: &Grid, values: &[f64], cells: &[Cell]) -> Vec<Facet> {
    let mut seen: HashSet<[u32; 3]> = HashSet::new();
    let mut out = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let m = cell.verts.len();
        for k in 0..m {
            let (a, b) = (cell.labels[(k + m - 1) % m], cell.labels[k]);
            if a == BOX || b == BOX || a == b {
                continue;
            }
            let mut key = [i as u32, a, b];
            key.sort_unstable();
            if !seen.insert(key) {
                continue;
            }
            let p = [grid.pos(key[0] as usize), grid.pos(key[1] as usize), grid.pos(key[2] as usize)];
            let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            if area2.abs() <= 1e-14 * grid.step() * grid.step() {
                continue;
            }
            let mut nodes = key;
            if area2 < 0.0 {
                nodes.swap(1, 2);
            }
            // Plane through the three lifted points.
            let q: Vec<[f64; 3]> = nodes.iter().map(|&n| {
                let x = grid.pos(n as usize);
                [x[0], x[1], values[n as usize]]
            }).collect();
            let (e1, e2) = ([q[1][0] - q[0][0], q[1][1] - q[0][1], q[1][2] - q[0][2]], [q[2][0] - q[0][0], q[2][1] - q[0][1], q[2][2] - q[0][2]]);
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            let gx = (e1[2] * e2[1] - e2[2] * e1[1]) / det;
            let gy = (e2[2] * e1[0] - e1[2] * e2[0]) / det;
            out.push(Facet { nodes, slope: [gx, gy], offset: q[0][2] - gx * q[0][0] - gy * q[0][1] });
        }
    }
    out
}

fn build_index(grid: &Grid, facets: &[Facet]) -> FacetIndex {
    let (lo, hi) = grid.index_bounds();
    let pad = MAX_RADIUS + 2;
    let lo = [lo[0] - pad, lo[1] - pad];
    let dims = [(hi[0] + pad - lo[0] + 1) as usize, (hi[1] + pad - lo[1] + 1) as usize];
    let mut cells = vec![Vec::new(); dims[0] * dims[1]];
    let lat = grid.lattice();
    for (f, fct) in facets.iter().enumerate() {
        let cs: Vec<[f64; 2]> = fct.nodes.iter().map(|&n| lat.coords(grid.pos(n as usize))).collect();
        let (mut a0, mut a1, mut b0, mut b1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for c in &cs {
            a0 = a0.min(c[0]);
            a1 = a1.max(c[0]);
            b0 = b0.min(c[1]);
            b1 = b1.max(c[1]);
        }
        let eps = 1e-9;
        for a in ((a0 - eps).floor() as i32)..=((a1 + eps).floor() as i32) {
            for b in ((b0 - eps).floor() as i32)..=((b1 + eps).floor() as i32) {
                let (x, y) = (a - lo[0], b - lo[1]);
                if x < 0 || y < 0 || x as usize >= dims[0] || y as usize >= dims[1] {
                    continue;
                }
                cells[x as usize * dims[1] + y as usize].push(f as u32);
            }
        }
    }
    FacetIndex { lo, dims, cells }
}

/// Serialized form of a [`PLConvexFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLDocument {
    pub schema: String,
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub grid: GridDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    pub h: f64,
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub boundary: Vec<bool>,
    pub origin: [f64; 2],
    pub basis: [[f64; 2]; 2],
    pub lattice_index: Vec<[i32; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disc_grid(n: usize) -> Arc<Grid> {
        let d = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 4 * n);
        Arc::new(Grid::on_domain(&d, 2.0 / n as f64).unwrap())
    }

    fn square_grid(n: usize) -> Arc<Grid> {
        let sq = ConvexBody::polygon(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        Arc::new(Grid::on_domain(&sq, 2.0 / n as f64).unwrap())
    }

    #[test]
    fn quadratic_cells_are_lattice_squares() {
        let g = square_grid(16);
        let h = g.step();
        let u = PLConvexFunction::from_fn(g.clone(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let c = g.node_at(2, -3).unwrap();
        assert!((u.cell(c).area() - h * h).abs() < 1e-14);
        let gr = u.gradient(c);
        assert!((gr[0] - 2.0 * h).abs() < 1e-14 && (gr[1] + 3.0 * h).abs() < 1e-14);
        assert!(u.nonconvex_nodes().is_empty());
        let hs = u.discrete_hessian(c).unwrap();
        assert!((hs.raw[0] - 1.0).abs() < 1e-10 && hs.raw[1].abs() < 1e-10 && (hs.raw[2] - 1.0).abs() < 1e-10);
        assert!((hs.norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn anisotropic_hessian() {
        let g = disc_grid(32);
        let u = PLConvexFunction::from_fn(g.clone(), |x| 0.5 * (4.0 * x[0] * x[0] + x[1] * x[1] / 4.0)).unwrap();
        let c = g.node_at(0, 0).unwrap();
        let hs = u.discrete_hessian(c).unwrap();
        assert!((hs.norm - 4.0).abs() < 1e-10);
        assert!((hs.psd[2] - 0.25).abs() < 1e-10);
        let edge = g.interior_nodes().find(|&i| !g.has_full_stencil(i, 2)).unwrap();
        assert!(matches!(u.discrete_hessian(edge), Err(GeometryError::BoundaryStencil { .. })));
    }

    #[test]
    fn eval_reproduces_nodes_and_bounds_quadratic() {
        let g = disc_grid(24);
        let f = |x: [f64; 2]| 0.5 * (x[0] * x[0] + x[1] * x[1]) + 0.3 * x[0];
        let u = PLConvexFunction::from_fn(g.clone(), f).unwrap();
        for i in 0..g.len() {
            let v = u.eval(g.pos(i)).unwrap();
            assert!((v - u.value(i)).abs() < 1e-12, "node {i}");
        }
        let h = g.step();
        for k in 0..200 {
            let t = k as f64 * 0.731;
            let y = [0.8 * t.cos() * (k as f64 / 200.0), 0.8 * t.sin() * (k as f64 / 200.0)];
            let v = u.eval(y).unwrap();
            // Linear interpolation of a quadratic overshoots by at most h²/4.
            assert!(v >= f(y) - 1e-12 && v <= f(y) + 0.25 * h * h + 1e-12);
        }
        assert!(u.eval([3.0, 0.0]).is_none());
    }

    #[test]
    fn cone_apex_cell_is_dual_ball() {
        let g = square_grid(20);
        let u = PLConvexFunction::from_fn(g.clone(), |x| x[0].abs().max(x[1].abs()) - 1.0).unwrap();
        let c = g.node_at(0, 0).unwrap();
        assert!((u.cell(c).area() - 2.0).abs() < 1e-12);
        assert!(u.nonconvex_nodes().is_empty());
    }

    #[test]
    fn detects_nonconvexity() {
        let g = square_grid(10);
        let mut vals: Vec<f64> = g.positions().iter().map(|x| 0.5 * (x[0] * x[0] + x[1] * x[1])).collect();
        let c = g.node_at(0, 0).unwrap();
        vals[c] += 0.1;
        let u = PLConvexFunction::new(g, vals).unwrap();
        assert_eq!(u.nonconvex_nodes(), &[c]);
    }

    #[test]
    fn document_roundtrip() {
        let g = disc_grid(16);
        let u = PLConvexFunction::from_fn(g, |x| x[0] * x[0] + x[1] * x[1] - 1.0).unwrap();
        let doc = u.to_document();
        let js = serde_json::to_string(&doc).unwrap();
        let back = PLConvexFunction::from_document(&serde_json::from_str(&js).unwrap()).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.grid().positions(), u.grid().positions());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn hessian_fit_exact_for_quadratics(
            a in 0.1f64..5.0, b in -1.0f64..1.0, c in 0.1f64..5.0,
            p in -2.0f64..2.0, q in -2.0f64..2.0, r in -1.0f64..1.0,
            shear in -0.5f64..0.5,
        ) {
            let lat = Lattice { origin: [0.01, -0.02], basis: [[0.1, 0.0], [0.1 * shear, 0.1]] };
            let ij: Vec<[i32; 2]> = (-4..=4).flat_map(|i| (-4..=4).map(move |j| [i, j])).collect();
            let dom = ConvexBody::polygon(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
            let grid = Grid::from_parts(lat, ij, vec![], dom).unwrap();
            let st = HessianStencil::new(&lat);
            let vals: Vec<f64> = grid.positions().iter()
                .map(|x| 0.5 * a * x[0] * x[0] + b * x[0] * x[1] + 0.5 * c * x[1] * x[1] + p * x[0] + q * x[1] + r)
                .collect();
            let h = st.fit(&grid, &vals, grid.node_at(0, 0).unwrap()).unwrap();
            prop_assert!((h[0] - a).abs() < 1e-10 && (h[1] - b).abs() < 1e-10 && (h[2] - c).abs() < 1e-10);
        }

        #[test]
        fn norm_bounded_by_laplacian(a in -1.0f64..5.0, b in -3.0f64..3.0, c in -1.0f64..5.0) {
            let f = HessianFit::from_raw([a, b, c]);
            prop_assert!(f.norm <= f.laplacian + 1e-8);
            let [lo, _] = sym2::eigenvalues(f.psd);
            prop_assert!(lo >= -1e-12 * (1.0 + f.norm));
        }
    }
}
