//! Node sets: lattice points inside a convex polygon plus boundary samples.

use std::collections::HashMap;

use super::{ConvexBody, GeometryError};

/// The affine lattice `origin + i·b1 + j·b2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub origin: [f64; 2],
    /// Columns `b1`, `b2`.
    pub basis: [[f64; 2]; 2],
}

impl Lattice {
    pub fn square(h: f64) -> Self {
        Self { origin: [0.0, 0.0], basis: [[h, 0.0], [0.0, h]] }
    }

    pub fn point(&self, i: i32, j: i32) -> [f64; 2] {
        let (i, j) = (i as f64, j as f64);
        [
            self.origin[0] + i * self.basis[0][0] + j * self.basis[1][0],
            self.origin[1] + i * self.basis[0][1] + j * self.basis[1][1],
        ]
    }

    pub fn offset(&self, di: i32, dj: i32) -> [f64; 2] {
        let (i, j) = (di as f64, dj as f64);
        [i * self.basis[0][0] + j * self.basis[1][0], i * self.basis[0][1] + j * self.basis[1][1]]
    }

    pub fn det(&self) -> f64 {
        self.basis[0][0] * self.basis[1][1] - self.basis[1][0] * self.basis[0][1]
    }

    /// Real lattice coordinates of `x`.
    pub fn coords(&self, x: [f64; 2]) -> [f64; 2] {
        let d = self.det();
        let (u, v) = (x[0] - self.origin[0], x[1] - self.origin[1]);
        [(self.basis[1][1] * u - self.basis[1][0] * v) / d, (-self.basis[0][1] * u + self.basis[0][0] * v) / d]
    }

    /// Shortest basis vector length, the nominal grid step.
    pub fn step(&self) -> f64 {
        self.basis[0][0].hypot(self.basis[0][1]).min(self.basis[1][0].hypot(self.basis[1][1]))
    }

    /// Euclidean radius covered by the Chebyshev index window of radius `r`.
    pub fn window_radius(&self, r: i32) -> f64 {
        let d = self.det();
        // Rows of the inverse basis matrix.
        let rows = [[self.basis[1][1] / d, -self.basis[1][0] / d], [-self.basis[0][1] / d, self.basis[0][0] / d]];
        let m = rows.iter().map(|w| w[0].hypot(w[1])).fold(0.0, f64::max);
        r as f64 / m
    }

    /// Image under `x ↦ A x + b`.
    pub fn mapped(&self, t: &super::AffineMap) -> Self {
        let o = t.apply2(self.origin);
        let zero = t.apply2([0.0, 0.0]);
        let col = |c: [f64; 2]| {
            let p = t.apply2(c);
            [p[0] - zero[0], p[1] - zero[1]]
        };
        Self { origin: o, basis: [col(self.basis[0]), col(self.basis[1])] }
    }
}

/// Interior nodes sit on a lattice; boundary nodes are free points on the
/// domain boundary. Node ids put interior nodes first.
#[derive(Debug, Clone)]
pub struct Grid {
    lattice: Lattice,
    domain: ConvexBody,
    pos: Vec<[f64; 2]>,
    ij: Vec<[i32; 2]>,
    n_interior: usize,
    lo: [i32; 2],
    dims: [usize; 2],
    index: Vec<u32>,
    buckets: HashMap<[i32; 2], Vec<u32>>,
}

const NONE: u32 = u32::MAX;

impl Grid {
    /// Square lattice of step `h` with origin 0: lattice points at depth at
    /// least `h/4` inside `domain` are interior nodes, and the polygon
    /// boundary is sampled at spacing at most `h`.
    pub fn on_domain(domain: &ConvexBody, h: f64) -> Result<Self, GeometryError> {
        if domain.dim() != 2 {
            return Err(GeometryError::Malformed("grids are planar".into()));
        }
        if !(h > 0.0) {
            return Err(GeometryError::Malformed("grid step must be positive".into()));
        }
        let lattice = Lattice::square(h);
        let verts = domain.vertices_2d();
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for v in &verts {
            xmin = xmin.min(v[0]);
            xmax = xmax.max(v[0]);
            ymin = ymin.min(v[1]);
            ymax = ymax.max(v[1]);
        }
        let mut ij = Vec::new();
        for i in (xmin / h).floor() as i32..=(xmax / h).ceil() as i32 {
            for j in (ymin / h).floor() as i32..=(ymax / h).ceil() as i32 {
                let p = lattice.point(i, j);
                if domain.depth(&p) >= 0.25 * h {
                    ij.push([i, j]);
                }
            }
        }
        let boundary = sample_boundary(&verts, h);
        Self::from_parts(lattice, ij, boundary, domain.clone())
    }

    /// Grid from explicit lattice indices and boundary points.
    pub fn from_parts(
        lattice: Lattice,
        ij: Vec<[i32; 2]>,
        boundary: Vec<[f64; 2]>,
        domain: ConvexBody,
    ) -> Result<Self, GeometryError> {
        if ij.is_empty() {
            return Err(GeometryError::Malformed("grid has no interior nodes".into()));
        }
        let n_interior = ij.len();
        let mut lo = [i32::MAX; 2];
        let mut hi = [i32::MIN; 2];
        for p in &ij {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let dims = [(hi[0] - lo[0] + 1) as usize, (hi[1] - lo[1] + 1) as usize];
        let mut index = vec![NONE; dims[0] * dims[1]];
        let mut pos: Vec<[f64; 2]> = Vec::with_capacity(ij.len() + boundary.len());
        for (n, p) in ij.iter().enumerate() {
            let slot = (p[0] - lo[0]) as usize * dims[1] + (p[1] - lo[1]) as usize;
            if index[slot] != NONE {
                return Err(GeometryError::Malformed("duplicate lattice node".into()));
            }
            index[slot] = n as u32;
            pos.push(lattice.point(p[0], p[1]));
        }
        let mut buckets: HashMap<[i32; 2], Vec<u32>> = HashMap::new();
        for (k, b) in boundary.iter().enumerate() {
            let c = lattice.coords(*b);
            buckets.entry([c[0].floor() as i32, c[1].floor() as i32]).or_default().push((n_interior + k) as u32);
            pos.push(*b);
        }
        let ij_all = ij;
        Ok(Self { lattice, domain, pos, ij: ij_all, n_interior, lo, dims, index, buckets })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn domain(&self) -> &ConvexBody {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        node >= self.n_interior
    }

    pub fn pos(&self, node: usize) -> [f64; 2] {
        self.pos[node]
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.pos
    }

    /// Lattice index of an interior node.
    pub fn ij(&self, node: usize) -> [i32; 2] {
        self.ij[node]
    }

    pub fn step(&self) -> f64 {
        self.lattice.step()
    }

    pub fn node_at(&self, i: i32, j: i32) -> Option<usize> {
        let (a, b) = (i - self.lo[0], j - self.lo[1]);
        if a < 0 || b < 0 || a as usize >= self.dims[0] || b as usize >= self.dims[1] {
            return None;
        }
        let v = self.index[a as usize * self.dims[1] + b as usize];
        (v != NONE).then_some(v as usize)
    }

    /// Boundary nodes whose lattice cell lies in the index window.
    pub fn boundary_near(&self, i0: i32, i1: i32, j0: i32, j1: i32, out: &mut Vec<usize>) {
        for i in i0..=i1 {
            for j in j0..=j1 {
                if let Some(v) = self.buckets.get(&[i, j]) {
                    out.extend(v.iter().map(|&n| n as usize));
                }
            }
        }
    }

    /// Interior nodes within lattice (Chebyshev) radius `r` of an interior
    /// node, plus boundary nodes within radius `r + 1`.
    pub fn neighbors(&self, node: usize, r: i32, out: &mut Vec<usize>) {
        out.clear();
        let [i, j] = self.ij[node];
        for di in -r..=r {
            for dj in -r..=r {
                if di == 0 && dj == 0 {
                    continue;
                }
                if let Some(n) = self.node_at(i + di, j + dj) {
                    out.push(n);
                }
            }
        }
        self.boundary_near(i - r - 1, i + r, j - r - 1, j + r, out);
    }

    /// Chebyshev distance in lattice coordinates between a node and an
    /// interior node.
    pub fn lattice_distance(&self, from: usize, to: usize) -> f64 {
        let a = self.ij[from];
        if to < self.n_interior {
            let b = self.ij[to];
            ((a[0] - b[0]).abs().max((a[1] - b[1]).abs())) as f64
        } else {
            let c = self.lattice.coords(self.pos[to]);
            (c[0] - a[0] as f64).abs().max((c[1] - a[1] as f64).abs())
        }
    }

    pub fn interior_nodes(&self) -> std::ops::Range<usize> {
        0..self.n_interior
    }

    pub fn boundary_nodes(&self) -> std::ops::Range<usize> {
        self.n_interior..self.pos.len()
    }

    /// Lattice index range `(lo, hi)` of interior nodes.
    pub fn index_bounds(&self) -> ([i32; 2], [i32; 2]) {
        (self.lo, [self.lo[0] + self.dims[0] as i32 - 1, self.lo[1] + self.dims[1] as i32 - 1])
    }

    /// Voronoi cell of an interior node among the interior nodes, clipped to
    /// `clip` (the domain when `None`). The index window grows until every
    /// node that could cut the cell has been visited.
    pub fn dual_cell(&self, node: usize, clip: Option<&ConvexBody>) -> Vec<[f64; 2]> {
        let body = clip.unwrap_or(&self.domain);
        let x = self.pos[node];
        let mut poly = body.vertices_2d();
        let [i, j] = self.ij[node];
        let mut done = 0;
        let mut r: i32 = 2;
        loop {
            for di in -r..=r {
                for dj in -r..=r {
                    if di.abs().max(dj.abs()) <= done {
                        continue;
                    }
                    if let Some(k) = self.node_at(i + di, j + dj) {
                        let y = self.pos[k];
                        let n = [y[0] - x[0], y[1] - x[1]];
                        let mid = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
                        poly = super::cell::clip_polygon(&poly, n, n[0] * mid[0] + n[1] * mid[1]);
                        if poly.len() < 3 {
                            return Vec::new();
                        }
                    }
                }
            }
            done = r;
            let reach = poly.iter().map(|p| (p[0] - x[0]).hypot(p[1] - x[1])).fold(0.0, f64::max);
            if 2.0 * reach <= self.lattice.window_radius(r) {
                return poly;
            }
            r *= 2;
        }
    }

    /// Areas of the dual cells of all interior nodes; they tile the domain.
    pub fn dual_areas(&self) -> Vec<f64> {
        self.interior_nodes()
            .map(|i| {
                let c = self.dual_cell(i, None);
                if c.len() < 3 {
                    0.0
                } else {
                    super::polygon_area(&c)
                }
            })
            .collect()
    }

    /// Whether all lattice points with offsets in `[-r, r]²` are interior nodes.
    pub fn has_full_stencil(&self, node: usize, r: i32) -> bool {
        if node >= self.n_interior {
            return false;
        }
        let [i, j] = self.ij[node];
        (-r..=r).all(|di| (-r..=r).all(|dj| self.node_at(i + di, j + dj).is_some()))
    }
}

/// Polygon vertices plus equally spaced points on each edge, spacing <= h.
pub fn sample_boundary(verts: &[[f64; 2]], h: f64) -> Vec<[f64; 2]> {
    let m = verts.len();
    let mut out = Vec::new();
    for k in 0..m {
        let (a, b) = (verts[k], verts[(k + 1) % m]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let pieces = (len / h).ceil().max(1.0) as usize;
        for s in 0..pieces {
            let t = s as f64 / pieces as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}
