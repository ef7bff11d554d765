//! Quasi-random section centers.

use crate::geometry::{ConvexBody, PLConvexFunction};

/// Radical inverse of `i` in `base`.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Up to `count` distinct interior nodes of `body`, taken from the Halton
/// sequence in bases 2 and 3 over the bounding box and snapped to the
/// nearest lattice node. Deterministic.
pub fn sample_centers(u: &PLConvexFunction, body: &ConvexBody, count: usize) -> Vec<usize> {
    let grid = u.grid();
    let verts = body.vertices_2d();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &verts {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(count);
    for i in 1..=(200 * count as u64 + 1000) {
        if out.len() >= count {
            break;
        }
        let p = [lo[0] + halton(i, 2) * (hi[0] - lo[0]), lo[1] + halton(i, 3) * (hi[1] - lo[1])];
        let c = grid.lattice().coords(p);
        let Some(n) = grid.node_at(c[0].round() as i32, c[1].round() as i32) else { continue };
        if body.contains(&grid.pos(n), 0.0) && seen.insert(n) {
            out.push(n);
        }
    }
    out
}
