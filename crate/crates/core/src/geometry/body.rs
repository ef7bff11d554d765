//! Convex polytopes in the plane and in space.
//!
//! A [`ConvexBody`] stores both representations: the extreme vertices and the
//! outward facet half-spaces `n·x <= c`. Planar bodies keep their vertices in
//! counter-clockwise order.

use serde::{Deserialize, Serialize};

use super::hull3::hull3d;
use super::GeometryError;

/// A full-dimensional convex polytope in dimension 2 or 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyDoc", into = "BodyDoc")]
pub struct ConvexBody {
    dim: usize,
    vertices: Vec<f64>,
    normals: Vec<f64>,
    offsets: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BodyDoc {
    dim: usize,
    vertices: Vec<Vec<f64>>,
}

impl TryFrom<BodyDoc> for ConvexBody {
    type Error = GeometryError;
    fn try_from(doc: BodyDoc) -> Result<Self, Self::Error> {
        if doc.vertices.iter().any(|v| v.len() != doc.dim) {
            return Err(GeometryError::Malformed("vertex dimension mismatch".into()));
        }
        let flat: Vec<f64> = doc.vertices.into_iter().flatten().collect();
        ConvexBody::from_points(doc.dim, &flat)
    }
}

impl From<ConvexBody> for BodyDoc {
    fn from(b: ConvexBody) -> Self {
        BodyDoc { dim: b.dim, vertices: b.vertices.chunks(b.dim).map(|c| c.to_vec()).collect() }
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Bounding-box diagonal of a flat point list.
pub(crate) fn bbox_diameter(dim: usize, pts: &[f64]) -> f64 {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in pts.chunks(dim) {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (0..dim).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
}

/// Planar convex hull by the monotone chain. Points are sorted
/// lexicographically; points within `1e-12 * diameter` of a hull edge are
/// dropped so that every returned vertex is extreme.
pub fn hull2d(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, GeometryError> {
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(GeometryError::Malformed("non-finite coordinate".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeometryError::DegenerateBody("fewer than three distinct points".into()));
    }
    let flat: Vec<f64> = pts.iter().flat_map(|p| [p[0], p[1]]).collect();
    let diam = bbox_diameter(2, &flat);
    let tol = 1e-12 * diam;
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        let len = ((b[0] - o[0]).powi(2) + (b[1] - o[1]).powi(2)).sqrt().max(f64::MIN_POSITIVE);
        cross(o, a, b) / len
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(GeometryError::DegenerateBody("points are collinear".into()));
    }
    let area: f64 = polygon_area(&hull);
    if area <= 1e-12 * diam * diam {
        return Err(GeometryError::DegenerateBody("zero area".into()));
    }
    Ok(hull)
}

/// Signed area of a polygon (positive for counter-clockwise order).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

impl ConvexBody {
    /// Convex hull of a flat list of points in dimension `dim`.
    pub fn from_points(dim: usize, points: &[f64]) -> Result<Self, GeometryError> {
        if points.len() % dim.max(1) != 0 || points.is_empty() {
            return Err(GeometryError::Malformed("point list length".into()));
        }
        match dim {
            2 => {
                let pts: Vec<[f64; 2]> = points.chunks(2).map(|c| [c[0], c[1]]).collect();
                Self::polygon(&pts)
            }
            3 => {
                let (verts, normals, offsets) = hull3d(points)?;
                Ok(Self { dim, vertices: verts, normals, offsets })
            }
            _ => Err(GeometryError::Malformed(format!("unsupported dimension {dim}"))),
        }
    }

    /// Planar body from arbitrary points; the hull is taken.
    pub fn polygon(points: &[[f64; 2]]) -> Result<Self, GeometryError> {
        let hull = hull2d(points)?;
        Ok(Self::from_ccw_hull(hull))
    }

    /// Planar body from vertices already in counter-clockwise convex position.
    pub(crate) fn from_ccw_hull(hull: Vec<[f64; 2]>) -> Self {
        let m = hull.len();
        let mut normals = Vec::with_capacity(2 * m);
        let mut offsets = Vec::with_capacity(m);
        for i in 0..m {
            let a = hull[i];
            let b = hull[(i + 1) % m];
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let len = (ex * ex + ey * ey).sqrt();
            let n = [ey / len, -ex / len];
            normals.extend_from_slice(&n);
            offsets.push(n[0] * a[0] + n[1] * a[1]);
        }
        Self { dim: 2, vertices: hull.into_iter().flatten().collect(), normals, offsets }
    }

    /// Regular polygon with `m` vertices circumscribing the disc `B(center, r)`.
    pub fn circumscribed_disc(center: [f64; 2], r: f64, m: usize) -> Self {
        Self::circumscribed_ellipse(center, [r, r], m)
    }

    /// Affine image of a regular `m`-gon circumscribing the ellipse with the
    /// given semi-axes, so the ellipse is contained in the body.
    pub fn circumscribed_ellipse(center: [f64; 2], axes: [f64; 2], m: usize) -> Self {
        let m = m.max(3);
        let rr = 1.0 / (std::f64::consts::PI / m as f64).cos();
        let hull = (0..m)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
                [center[0] + axes[0] * rr * phi.cos(), center[1] + axes[1] * rr * phi.sin()]
            })
            .collect();
        Self::from_ccw_hull(hull)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.vertices.chunks(self.dim)
    }

    /// Vertices of a planar body in counter-clockwise order.
    pub fn vertices_2d(&self) -> Vec<[f64; 2]> {
        debug_assert_eq!(self.dim, 2);
        self.vertices.chunks(2).map(|c| [c[0], c[1]]).collect()
    }

    pub fn num_facets(&self) -> usize {
        self.offsets.len()
    }

    /// Facet `k` as `(unit outward normal, offset)`.
    pub fn facet(&self, k: usize) -> (&[f64], f64) {
        (&self.normals[k * self.dim..(k + 1) * self.dim], self.offsets[k])
    }

    pub fn facets(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.normals.chunks(self.dim).zip(self.offsets.iter().copied())
    }

    /// Smallest slack `c - n·x` over facets: the distance to the boundary for
    /// interior points, negative outside.
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.facets()
            .map(|(n, c)| c - n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Half-space membership with absolute tolerance.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.depth(x) >= -tol
    }

    /// Membership through the vertex representation: a fan decomposition from
    /// the vertex centroid into triangles (or tetrahedra).
    pub fn contains_by_vertices(&self, x: &[f64], tol: f64) -> bool {
        let c = self.centroid_of_vertices();
        match self.dim {
            2 => {
                let v = self.vertices_2d();
                let p = [x[0], x[1]];
                let c = [c[0], c[1]];
                let m = v.len();
                (0..m).any(|i| {
                    let (a, b) = (v[i], v[(i + 1) % m]);
                    let scale = |u: [f64; 2], w: [f64; 2]| ((u[0] - w[0]).hypot(u[1] - w[1])).max(1e-300);
                    cross(c, a, p) / scale(a, c) >= -tol
                        && cross(a, b, p) / scale(b, a) >= -tol
                        && cross(b, c, p) / scale(c, b) >= -tol
                })
            }
            _ => {
                // Tetrahedra from the centroid over a fan of each facet polygon.
                let p = [x[0], x[1], x[2]];
                let c = [c[0], c[1], c[2]];
                (0..self.num_facets()).any(|k| {
                    let poly = self.facet_polygon_3d(k);
                    (1..poly.len().saturating_sub(1)).any(|i| in_tetra(p, [c, poly[0], poly[i], poly[i + 1]], tol))
                })
            }
        }
    }

    pub fn centroid_of_vertices(&self) -> Vec<f64> {
        let m = self.num_vertices() as f64;
        (0..self.dim).map(|k| self.vertices().map(|v| v[k]).sum::<f64>() / m).collect()
    }

    /// Lebesgue measure (area or volume).
    pub fn volume(&self) -> f64 {
        match self.dim {
            2 => polygon_area(&self.vertices_2d()),
            _ => {
                // Sum of cones from an interior point over each facet.
                let c = self.centroid_of_vertices();
                let mut vol = 0.0;
                for (k, (n, off)) in self.facets().enumerate() {
                    let h = off - n.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
                    vol += h * self.facet_area_3d(k) / 3.0;
                }
                vol
            }
        }
    }

    /// Vertices on facet `k`, ordered around the facet.
    fn facet_polygon_3d(&self, k: usize) -> Vec<[f64; 3]> {
        let (n, off) = self.facet(k);
        let tol = 1e-9 * bbox_diameter(3, &self.vertices).max(1e-300);
        let on: Vec<[f64; 3]> = self
            .vertices()
            .filter(|v| (n.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() - off).abs() <= tol)
            .map(|v| [v[0], v[1], v[2]])
            .collect();
        if on.len() < 3 {
            return on;
        }
        let n = [n[0], n[1], n[2]];
        let a = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e1 = normalize3(cross3(n, a));
        let e2 = cross3(n, e1);
        let m = on.len() as f64;
        let g = [0, 1, 2].map(|i| on.iter().map(|p| p[i]).sum::<f64>() / m);
        let mut keyed: Vec<(f64, [f64; 3])> = on
            .into_iter()
            .map(|p| {
                let d = [p[0] - g[0], p[1] - g[1], p[2] - g[2]];
                (dot3(d, e2).atan2(dot3(d, e1)), p)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        keyed.into_iter().map(|(_, p)| p).collect()
    }

    fn facet_area_3d(&self, k: usize) -> f64 {
        let poly = self.facet_polygon_3d(k);
        let mut s = [0.0; 3];
        for i in 1..poly.len().saturating_sub(1) {
            let a = [poly[i][0] - poly[0][0], poly[i][1] - poly[0][1], poly[i][2] - poly[0][2]];
            let b = [poly[i + 1][0] - poly[0][0], poly[i + 1][1] - poly[0][1], poly[i + 1][2] - poly[0][2]];
            let c = cross3(a, b);
            s = [s[0] + c[0], s[1] + c[1], s[2] + c[2]];
        }
        0.5 * dot3(s, s).sqrt()
    }

    /// Homothety about `center` with ratio `tau`.
    pub fn dilate(&self, center: &[f64], tau: f64) -> Self {
        let mut out = self.clone();
        for v in out.vertices.chunks_mut(self.dim) {
            for k in 0..self.dim {
                v[k] = center[k] + tau * (v[k] - center[k]);
            }
        }
        for (k, off) in out.offsets.iter_mut().enumerate() {
            let n = &self.normals[k * self.dim..(k + 1) * self.dim];
            let nc: f64 = n.iter().zip(center).map(|(a, b)| a * b).sum();
            *off = nc + tau * (*off - nc);
        }
        out
    }

    /// Largest distance from `x` to a vertex.
    pub fn max_distance_from(&self, x: &[f64]) -> f64 {
        self.vertices()
            .map(|v| v.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Whether every vertex of `self` lies in `other`.
    pub fn is_inside(&self, other: &ConvexBody, tol: f64) -> bool {
        self.vertices().all(|v| other.contains(v, tol))
    }

    /// Separating-axis test for two planar bodies.
    pub fn intersects(&self, other: &ConvexBody) -> bool {
        for body in [self, other] {
            for (n, c) in body.facets() {
                let min_other = if std::ptr::eq(body, self) { other } else { self }
                    .vertices()
                    .map(|v| n.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                if min_other > c {
                    return false;
                }
            }
        }
        true
    }

    /// Image under an affine map with positive determinant.
    pub fn map(&self, t: &super::AffineMap) -> Self {
        let pts: Vec<f64> = self.vertices().flat_map(|v| t.apply(v)).collect();
        if self.dim == 2 {
            Self::from_ccw_hull(pts.chunks(2).map(|c| [c[0], c[1]]).collect())
        } else {
            Self::from_points(self.dim, &pts).expect("affine image of a body is a body")
        }
    }
}

fn in_tetra(p: [f64; 3], t: [[f64; 3]; 4], tol: f64) -> bool {
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let vol = |a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]| dot3(sub(b, a), cross3(sub(c, a), sub(d, a)));
    let total = vol(t[0], t[1], t[2], t[3]);
    if total.abs() < 1e-300 {
        return false;
    }
    let scale = total.abs().cbrt().powi(2).max(1e-300);
    let parts = [
        vol(p, t[1], t[2], t[3]),
        vol(t[0], p, t[2], t[3]),
        vol(t[0], t[1], p, t[3]),
        vol(t[0], t[1], t[2], p),
    ];
    parts.iter().all(|v| v * total.signum() / scale >= -tol)
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let n = dot3(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexBody {
        ConvexBody::polygon(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [0.0, 0.0], [1.0, 0.0]]).unwrap()
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let s = square();
        assert_eq!(s.num_vertices(), 4);
        assert!((s.volume() - 4.0).abs() < 1e-14);
        assert!(s.contains(&[0.5, 0.5], 0.0));
        assert!(!s.contains(&[1.5, 0.5], 1e-9));
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let r = ConvexBody::polygon(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        assert!(matches!(r, Err(GeometryError::DegenerateBody(_))));
    }

    #[test]
    fn dilation_scales_area() {
        let s = square();
        let d = s.dilate(&[0.5, 0.0], 0.5);
        assert!((d.volume() - 1.0).abs() < 1e-14);
        assert!(d.contains(&[0.5, 0.0], 0.0));
        assert!((d.depth(&[0.5, 0.0]) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn circumscribed_polygon_contains_disc() {
        let b = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 17);
        assert!((b.depth(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!(b.volume() > std::f64::consts::PI);
    }

    #[test]
    fn cube_volume_and_membership() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.extend_from_slice(&[(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        pts.extend_from_slice(&[0.5, 0.5, 0.5]);
        let c = ConvexBody::from_points(3, &pts).unwrap();
        assert_eq!(c.num_vertices(), 8);
        assert!((c.volume() - 1.0).abs() < 1e-12);
        assert!(c.contains(&[0.2, 0.3, 0.9], 0.0));
        assert!(!c.contains(&[0.2, 1.3, 0.9], 1e-9));
    }

    #[test]
    fn separating_axis() {
        let a = square();
        let b = a.dilate(&[0.0, 0.0], 0.5);
        let far = ConvexBody::polygon(&[[3.0, 3.0], [4.0, 3.0], [3.0, 4.0]]).unwrap();
        assert!(a.intersects(&b));
        assert!(!a.intersects(&far));
    }

    #[test]
    fn json_roundtrip() {
        let s = square();
        let js = serde_json::to_string(&s).unwrap();
        let back: ConvexBody = serde_json::from_str(&js).unwrap();
        assert_eq!(s, back);
    }
}
