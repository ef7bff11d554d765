//! Sections `S(x, p, t) = {y : u(y) <= u(x) + p·(y − x) + t}`.
//!
//! The region is traced by casting rays from the center against the
//! piecewise-linear interpolant. Along each ray the excess
//! `g(y) = u(y) − u(x) − p·(y − x)` is convex and vanishes at the center,
//! so the exit radius is found by bisection and every traced vertex lies in
//! the section. Sections traced with the same ray count can be compared ray
//! by ray.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SectionError;
use crate::geometry::{hull2d, ConvexBody, PLConvexFunction};

const MIN_RAYS: usize = 64;
const MAX_RAYS: usize = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Section {
    /// Center node.
    pub center: usize,
    pub x: [f64; 2],
    pub slope: [f64; 2],
    pub height: f64,
    /// Exit radius along `2πk/n` for `k < n`.
    pub radii: Vec<f64>,
    /// Hull of the traced boundary; `None` when the section is too thin to
    /// have interior.
    #[serde(skip)]
    pub region: Option<ConvexBody>,
    /// Interior nodes with `g <= t`, paired with `g`.
    pub nodes: Vec<(usize, f64)>,
}

/// `u(y) − u(x) − p·(y − x)` for the interpolant, `None` outside the domain.
pub fn excess(u: &PLConvexFunction, x: [f64; 2], ux: f64, p: [f64; 2], y: [f64; 2]) -> Option<f64> {
    u.eval(y).map(|v| v - ux - p[0] * (y[0] - x[0]) - p[1] * (y[1] - x[1]))
}

/// Nodal excess, exact at nodes.
pub fn node_excess(u: &PLConvexFunction, center: usize, p: [f64; 2], node: usize) -> f64 {
    let (x, y) = (u.grid().pos(center), u.grid().pos(node));
    u.value(node) - u.value(center) - p[0] * (y[0] - x[0]) - p[1] * (y[1] - x[1])
}

fn direction(k: usize, n: usize) -> [f64; 2] {
    let a = 2.0 * PI * k as f64 / n as f64;
    [a.cos(), a.sin()]
}

/// Distance from `x` to the domain boundary along `e`.
fn exit_distance(domain: &ConvexBody, x: [f64; 2], e: [f64; 2]) -> f64 {
    let mut s = f64::INFINITY;
    for (n, off) in domain.facets() {
        let ne = n[0] * e[0] + n[1] * e[1];
        if ne > 0.0 {
            s = s.min((off - n[0] * x[0] - n[1] * x[1]) / ne);
        }
    }
    s.max(0.0)
}

impl Section {
    pub fn rays(&self) -> usize {
        self.radii.len()
    }

    /// Traced boundary points `x + r_k e_k`.
    pub fn boundary_points(&self) -> Vec<[f64; 2]> {
        let n = self.radii.len();
        self.radii
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let e = direction(k, n);
                [self.x[0] + r * e[0], self.x[1] + r * e[1]]
            })
            .collect()
    }

    /// Membership in the exact section of the interpolant.
    pub fn contains(&self, u: &PLConvexFunction, y: [f64; 2], tol: f64) -> bool {
        excess(u, self.x, u.value(self.center), self.slope, y).is_some_and(|g| g <= self.height + tol)
    }

    /// Region area, 0 for degenerate sections.
    pub fn area(&self) -> f64 {
        self.region.as_ref().map_or(0.0, |r| r.volume())
    }

    /// Largest distance from the center to the traced boundary.
    pub fn outer_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// Radius of the largest disc about the center inside the region.
    pub fn inner_radius(&self) -> f64 {
        self.region.as_ref().map_or(0.0, |r| r.depth(&self.x).max(0.0))
    }
}

/// The section of `u` at interior node `center` with height `t`, using the
/// stored subgradient as slope.
pub fn section(u: &PLConvexFunction, center: usize, t: f64) -> Result<Section, SectionError> {
    let first = section_with_rays(u, center, t, MIN_RAYS)?;
    // Refine so the traced boundary is sampled at about the grid step.
    let perimeter: f64 = {
        let pts = first.boundary_points();
        (0..pts.len()).map(|k| {
            let (a, b) = (pts[k], pts[(k + 1) % pts.len()]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        }).sum()
    };
    let want = ((perimeter / u.grid().step()).ceil() as usize).clamp(MIN_RAYS, MAX_RAYS);
    if want > MIN_RAYS {
        section_with_rays(u, center, t, want.next_power_of_two().min(MAX_RAYS))
    } else {
        Ok(first)
    }
}

/// Section traced with exactly `rays` rays.
pub fn section_with_rays(u: &PLConvexFunction, center: usize, t: f64, rays: usize) -> Result<Section, SectionError> {
    let grid = u.grid();
    if grid.is_boundary(center) || center >= grid.len() {
        return Err(SectionError::NotInterior { node: center });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SectionError::Geometry(crate::geometry::GeometryError::Malformed(format!("height {t}"))));
    }
    let p = u.gradient(center);
    if p[0].is_nan() {
        return Err(SectionError::Geometry(crate::geometry::GeometryError::NonConvexInput { node: center }));
    }
    let x = grid.pos(center);
    let ux = u.value(center);
    let domain = grid.domain();
    let g = |y: [f64; 2]| excess(u, x, ux, p, y);
    let mut radii = Vec::with_capacity(rays);
    for k in 0..rays {
        let e = direction(k, rays);
        let s_exit = exit_distance(domain, x, e) * (1.0 - 1e-12);
        let at = |s: f64| [x[0] + s * e[0], x[1] + s * e[1]];
        // Points where the interpolant is undefined are outside the domain.
        let inside = |s: f64| g(at(s)).is_some_and(|v| v <= t);
        if inside(s_exit) {
            return Err(SectionError::EscapesDomain { node: center, height: t });
        }
        radii.push(exit_radius(|s| g(at(s)).map(|v| v - t), t, s_exit));
    }
    let mut s = Section { center, x, slope: p, height: t, radii, region: None, nodes: Vec::new() };
    let h = grid.step();
    let pts = s.boundary_points();
    if s.outer_radius() > 1e-9 * h {
        s.region = hull2d(&pts).ok().and_then(|v| ConvexBody::polygon(&v).ok());
    }
    s.nodes = sublevel_nodes(u, center, p, t, &pts);
    Ok(s)
}

/// Largest `s` in `[0, b)` with `φ(s) <= 0` for `φ` convex along the ray,
/// `φ(0) = −t <= 0 < φ(b)`; `None` counts as positive.
///
/// Illinois iteration keeps a bracket `φ(lo) <= 0 < φ(hi)`, falling back to
/// bisection where `φ` is undefined. On piecewise-linear `φ` the secant step
/// lands on the root once both ends share a linear piece.
fn exit_radius(phi: impl Fn(f64) -> Option<f64>, t: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, b);
    let (mut flo, mut fhi) = (-t, phi(b).unwrap_or(f64::NAN));
    let mut side = 0i8;
    let mut at_lo = -t;
    let tol = 1e-13 * b.max(1e-300);
    for _ in 0..200 {
        if hi - lo <= tol || (lo > 0.0 && at_lo >= -1e-14 * t) {
            break;
        }
        let mut s = if fhi.is_finite() && fhi > flo { lo - flo * (hi - lo) / (fhi - flo) } else { 0.5 * (lo + hi) };
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        match phi(s) {
            Some(v) if v <= 0.0 => {
                lo = s;
                flo = v;
                at_lo = v;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            }
            v => {
                hi = s;
                fhi = v.unwrap_or(f64::NAN);
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
    }
    lo
}

/// Interior nodes with nodal excess at most `t`, searched in the lattice
/// window spanned by the traced boundary padded by two cells.
fn sublevel_nodes(u: &PLConvexFunction, center: usize, p: [f64; 2], t: f64, pts: &[[f64; 2]]) -> Vec<(usize, f64)> {
    let grid = u.grid();
    let lat = grid.lattice();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for q in pts.iter().chain(std::iter::once(&grid.pos(center))) {
        let c = lat.coords(*q);
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let mut out = Vec::new();
    for i in (lo[0].floor() as i32 - 2)..=(hi[0].ceil() as i32 + 2) {
        for j in (lo[1].floor() as i32 - 2)..=(hi[1].ceil() as i32 + 2) {
            if let Some(n) = grid.node_at(i, j) {
                let gv = node_excess(u, center, p, n);
                if gv <= t {
                    out.push((n, gv));
                }
            }
        }
    }
    out
}

/// The homothety `τS` of the region about the center.
pub fn dilate(s: &Section, tau: f64) -> Option<ConvexBody> {
    s.region.as_ref().map(|r| r.dilate(&s.x, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use std::sync::Arc;

    fn quad(h: f64, a: f64, b: f64) -> PLConvexFunction {
        let body = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 128);
        let g = Arc::new(Grid::on_domain(&body, h).unwrap());
        PLConvexFunction::from_fn(g, |p| 0.5 * (a * p[0] * p[0] + b * p[1] * p[1])).unwrap()
    }

    #[test]
    fn quadratic_sections_are_discs() {
        let h = 1.0 / 32.0;
        let u = quad(h, 1.0, 1.0);
        let c = u.grid().node_at(3, -2).unwrap();
        let t = 0.05;
        let s = section(&u, c, t).unwrap();
        let r = (2.0 * t).sqrt();
        // The interpolant lies above the quadratic by at most h²/4.
        let slack = h * h / 4.0 / r;
        for &rk in &s.radii {
            assert!(rk <= r + 1e-12 && rk >= r - slack, "{rk} vs {r}");
        }
        let exact = s.nodes.len();
        let count = u.grid().interior_nodes().filter(|&i| {
            let (p, x) = (u.grid().pos(i), s.x);
            (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2) <= 2.0 * t + 1e-12
        }).count();
        assert_eq!(exact, count);
        assert!((s.area() - PI * r * r).abs() < 0.02 * PI * r * r);
    }

    #[test]
    fn anisotropic_section_is_ellipse() {
        let u = quad(1.0 / 64.0, 4.0, 0.25);
        let c = u.grid().node_at(0, 0).unwrap();
        let t = 0.02;
        let s = section(&u, c, t).unwrap();
        let n = s.rays();
        let (ax, ay) = ((t / 2.0).sqrt(), (8.0 * t).sqrt());
        assert!((s.radii[0] - ax).abs() < 0.01 * ax);
        assert!((s.radii[n / 4] - ay).abs() < 0.01 * ay);
        assert!((s.area() - PI * ax * ay).abs() < 0.02 * PI * ax * ay);
    }

    #[test]
    fn strict_cone_section_at_zero_height_is_a_point() {
        let body = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 64);
        let g = Arc::new(Grid::on_domain(&body, 0.1).unwrap());
        let u = PLConvexFunction::from_fn(g.clone(), |p| 0.3 * p[0] + p[0].hypot(p[1])).unwrap();
        let c = g.node_at(0, 0).unwrap();
        let s = section(&u, c, 0.0).unwrap();
        assert!(s.region.is_none());
        assert_eq!(s.nodes.len(), 1);
    }

    #[test]
    fn escaping_section_is_reported() {
        let u = quad(1.0 / 16.0, 1.0, 1.0);
        let c = u.grid().node_at(8, 0).unwrap();
        assert!(matches!(section(&u, c, 0.5), Err(SectionError::EscapesDomain { .. })));
    }

    #[test]
    fn dilation_about_center() {
        let u = quad(1.0 / 32.0, 1.0, 1.0);
        let c = u.grid().node_at(0, 4).unwrap();
        let s = section(&u, c, 0.04).unwrap();
        let d1 = dilate(&s, 1.0).unwrap();
        assert!((d1.volume() - s.area()).abs() < 1e-14);
        let d2 = dilate(&s, 2.0).unwrap();
        assert!((d2.volume() - 4.0 * s.area()).abs() < 1e-12);
        let dh = dilate(&s, 0.5).unwrap();
        assert!((dh.volume() - 0.25 * s.area()).abs() < 1e-13);
    }
}
