//! Convex envelopes of sampled functions with boundary data.
//!
//! `Γ_w(y) = sup{ℓ(y) : ℓ affine, ℓ <= w at the nodes, ℓ <= b at the boundary
//! points}` is the lower convex hull of the lifted points. Each point's
//! subdifferential polygon against all other points gives the hull facets at
//! its vertices; the envelope at a node is the largest of those planes.

use super::cell::{Cell, BOX};
use super::GeometryError;

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    /// Envelope values at the nodes.
    pub gamma: Vec<f64>,
    /// `w - Γ_w <= contact_tol` at the node.
    pub contact: Vec<bool>,
    /// Subdifferential of `Γ_w` at each node; empty for nodes that are not
    /// hull vertices.
    pub cells: Vec<Cell>,
    pub oscillation: f64,
    pub contact_tol: f64,
}

/// Relative contact tolerance: nodes with `w − Γ_w <= 1e-6·osc(w)` are in
/// the contact set.
pub const CONTACT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
struct Plane {
    offset: f64,
    slope: [f64; 2],
}

/// Envelope of node values `w` at `points`, constrained by `boundary_values`
/// at `boundary` points.
pub fn convex_envelope(
    points: &[[f64; 2]],
    w: &[f64],
    boundary: &[[f64; 2]],
    boundary_values: &[f64],
) -> Result<EnvelopeResult, GeometryError> {
    if points.len() != w.len() || boundary.len() != boundary_values.len() {
        return Err(GeometryError::Malformed("envelope input lengths differ".into()));
    }
    if w.iter().chain(boundary_values).chain(points.iter().chain(boundary).flatten()).any(|v| !v.is_finite()) {
        return Err(GeometryError::Malformed("non-finite envelope input".into()));
    }
    let n = points.len();
    let all: Vec<[f64; 2]> = points.iter().chain(boundary).copied().collect();
    let vals: Vec<f64> = w.iter().chain(boundary_values).copied().collect();
    let total = all.len();
    if total < 3 {
        return Err(GeometryError::Malformed("envelope needs at least three points".into()));
    }
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let osc = hi - lo;
    let mut max_slope: f64 = 0.0;
    for i in 0..total {
        for j in i + 1..total {
            let d = (all[j][0] - all[i][0]).hypot(all[j][1] - all[i][1]);
            if d > 0.0 {
                max_slope = max_slope.max((vals[j] - vals[i]).abs() / d);
            }
        }
    }
    let half = 16.0 * max_slope + 1e-9 * (1.0 + max_slope);

    let mut planes: Vec<Plane> = Vec::new();
    let mut cells: Vec<Cell> = Vec::with_capacity(n);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(total);
    for k in 0..total {
        let x = all[k];
        order.clear();
        order.extend((0..total).filter(|&j| j != k).map(|j| ((all[j][0] - x[0]).powi(2) + (all[j][1] - x[1]).powi(2), j)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut cell = Cell::boxed([0.0, 0.0], half);
        for &(d2, j) in order.iter() {
            if d2 == 0.0 {
                continue;
            }
            cell.clip([all[j][0] - x[0], all[j][1] - x[1]], vals[j] - vals[k], j as u32);
            if cell.is_empty() {
                break;
            }
        }
        let m = cell.verts.len();
        for v in 0..m {
            if cell.labels[(v + m - 1) % m] != BOX && cell.labels[v] != BOX {
                let g = cell.verts[v];
                planes.push(Plane { offset: vals[k] - g[0] * x[0] - g[1] * x[1], slope: g });
            }
        }
        if k < n {
            cells.push(cell);
        }
    }

    let contact_tol = CONTACT_REL_TOL * osc.max(f64::MIN_POSITIVE);
    let mut gamma = Vec::with_capacity(n);
    let mut contact = Vec::with_capacity(n);
    for i in 0..n {
        let y = points[i];
        let g = planes.iter().map(|p| p.offset + p.slope[0] * y[0] + p.slope[1] * y[1]).fold(f64::NEG_INFINITY, f64::max);
        let g = if g.is_finite() { g.min(w[i]) } else { f64::NEG_INFINITY };
        contact.push(w[i] - g <= contact_tol);
        gamma.push(g);
    }
    Ok(EnvelopeResult { gamma, contact, cells, oscillation: osc, contact_tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::sample_boundary;

    fn disc_nodes(n: i32, r: f64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let h = 2.0 * r / n as f64;
        let mut pts = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                let p = [i as f64 * h, j as f64 * h];
                if p[0].hypot(p[1]) <= r - 0.25 * h {
                    pts.push(p);
                }
            }
        }
        let m = (2.0 * std::f64::consts::PI * r / h).ceil() as usize;
        let ring: Vec<[f64; 2]> = (0..m)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        (pts, sample_boundary(&ring, h))
    }

    /// Independent oracle: the double Legendre conjugate
    /// `Γ(y) = max_g [g·y + min_j (w_j − g·x_j)]`, maximized over slopes by a
    /// zooming grid search (the objective is concave in `g`).
    fn legendre(points: &[[f64; 2]], w: &[f64], bnd: &[[f64; 2]], y: [f64; 2], gmax: f64) -> f64 {
        let phi = |g: [f64; 2]| {
            let mut m = f64::INFINITY;
            for (p, v) in points.iter().zip(w) {
                m = m.min(v - g[0] * p[0] - g[1] * p[1]);
            }
            for p in bnd {
                m = m.min(-g[0] * p[0] - g[1] * p[1]);
            }
            m + g[0] * y[0] + g[1] * y[1]
        };
        let (mut center, mut half) = ([0.0, 0.0], gmax);
        let mut best = f64::NEG_INFINITY;
        let steps = 40;
        for _ in 0..14 {
            let mut arg = center;
            for a in 0..=steps {
                for b in 0..=steps {
                    let g = [
                        center[0] - half + 2.0 * half * a as f64 / steps as f64,
                        center[1] - half + 2.0 * half * b as f64 / steps as f64,
                    ];
                    let v = phi(g);
                    if v > best {
                        best = v;
                        arg = g;
                    }
                }
            }
            center = arg;
            half *= 0.25;
        }
        best
    }

    #[test]
    fn convex_data_is_its_own_envelope() {
        let (pts, bnd) = disc_nodes(8, 1.0);
        let w: Vec<f64> = pts.iter().map(|p| 0.5 * (p[0] * p[0] + p[1] * p[1] - 1.0)).collect();
        let env = convex_envelope(&pts, &w, &bnd, &vec![0.0; bnd.len()]).unwrap();
        assert!(env.contact.iter().all(|&c| c));
        for (g, v) in env.gamma.iter().zip(&w) {
            assert!((g - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn double_well_bridges_the_ridge() {
        let (pts, bnd) = disc_nodes(8, 1.0);
        let a = [0.5, 0.0];
        let w: Vec<f64> = pts
            .iter()
            .map(|p| {
                let d1 = (p[0] - a[0]).hypot(p[1] - a[1]);
                let d2 = (p[0] + a[0]).hypot(p[1] + a[1]);
                -1.0 + 2.0 * d1.min(d2)
            })
            .collect();
        let zeros = vec![0.0; bnd.len()];
        let env = convex_envelope(&pts, &w, &bnd, &zeros).unwrap();
        // The ridge x = 0 is bridged: between the wells the envelope is the
        // affine bridge at height -1, strictly below w.
        for (i, p) in pts.iter().enumerate() {
            if p[0].abs() < 1e-12 && p[1].abs() < 0.2 {
                assert!(!env.contact[i]);
                assert!((env.gamma[i] + 1.0).abs() < 1e-9, "{}", env.gamma[i]);
            }
            assert!(env.gamma[i] <= w[i] + 1e-12);
        }
        for (i, p) in pts.iter().enumerate().step_by(7) {
            let o = legendre(&pts, &w, &bnd, *p, 8.0);
            assert!((env.gamma[i] - o).abs() <= 1e-6, "envelope {} oracle {o} at {p:?}", env.gamma[i]);
        }
    }

    #[test]
    fn idempotent() {
        let (pts, bnd) = disc_nodes(9, 1.0);
        let w: Vec<f64> = pts.iter().map(|p| (3.0 * p[0]).sin() * 0.3 + p[1] * p[1] - 0.8).collect();
        let zeros = vec![0.0; bnd.len()];
        let e1 = convex_envelope(&pts, &w, &bnd, &zeros).unwrap();
        let e2 = convex_envelope(&pts, &e1.gamma, &bnd, &zeros).unwrap();
        for (a, b) in e1.gamma.iter().zip(&e2.gamma) {
            assert!((a - b).abs() <= 1e-10);
        }
    }
}
