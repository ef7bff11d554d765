//! Dilation chains and engulfing constants of section families.

use serde::{Deserialize, Serialize};

use super::section::{excess, section, section_with_rays, Section};
use super::SectionError;
use crate::geometry::{john_normalize, ConvexBody, PLConvexFunction};

/// Relative slack of ray-wise inclusion tests.
const RAY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EngulfingReport {
    pub samples: usize,
    pub taus: Vec<f64>,
    /// Smallest `β` with `S(x, τt) ⊂ βS(x, t)`, maximized over samples.
    pub beta: Vec<f64>,
    /// Smallest `θ` with `S(y, t) ⊂ S(x, θt)`, maximized over intersecting pairs.
    pub theta: f64,
    pub pairs: usize,
    /// Largest `|Tq| / 3n` over traced points `q` of `S(x, 2t)` where `T`
    /// normalizes `S(x, t)`; at most 1.
    pub outer_ratio: f64,
    /// Smallest depth of the origin in `T(S(x, 2t))`; at least 1.
    pub inner_depth: f64,
}

fn ray_violation(inner: &Section, outer: &Section, scale: f64, node: usize, height: f64, tau: f64) -> Result<(), SectionError> {
    for (k, (a, b)) in inner.radii.iter().zip(&outer.radii).enumerate() {
        if scale * a > b * (1.0 + RAY_TOL) + 1e-14 {
            let q = inner.boundary_points()[k];
            let w = [inner.x[0] + scale * (q[0] - inner.x[0]), inner.x[1] + scale * (q[1] - inner.x[1])];
            return Err(SectionError::InclusionViolation { node, height, tau, witness: w });
        }
    }
    Ok(())
}

/// Checks `τS(x,t) ⊂ S(x,τt) ⊂ βS(x,t)` for each `τ`, the sandwich
/// `S(x,t) ⊂ S(x,2t) ⊂ 2S(x,t)` and the normalization bounds of the double
/// section at every sample, and measures `θ` on the given pairs
/// `(x, y, t)`.
pub fn verify_engulfing(
    u: &PLConvexFunction,
    samples: &[(usize, f64)],
    taus: &[f64],
    pairs: &[(usize, usize, f64)],
) -> Result<EngulfingReport, SectionError> {
    let mut rep = EngulfingReport {
        taus: taus.to_vec(),
        beta: vec![0.0; taus.len()],
        inner_depth: f64::INFINITY,
        ..Default::default()
    };
    let n = 2.0;
    for &(x, t) in samples {
        let s = section(u, x, t)?;
        let Some(region) = s.region.as_ref() else { continue };
        let rays = s.rays();
        for (k, &tau) in taus.iter().enumerate() {
            let st = section_with_rays(u, x, tau * t, rays)?;
            ray_violation(&s, &st, tau, x, t, tau)?;
            let b = s.radii.iter().zip(&st.radii).map(|(a, b)| b / a).fold(0.0, f64::max);
            rep.beta[k] = rep.beta[k].max(b);
        }
        let s2 = section_with_rays(u, x, 2.0 * t, rays)?;
        ray_violation(&s, &s2, 1.0, x, t, 2.0)?;
        ray_violation(&s2, &s, 0.5, x, t, 2.0)?;
        let tm = john_normalize(region)?;
        let mapped: Vec<[f64; 2]> = s2.boundary_points().iter().map(|q| tm.apply2(*q)).collect();
        let far = mapped.iter().map(|q| q[0].hypot(q[1])).fold(0.0, f64::max);
        rep.outer_ratio = rep.outer_ratio.max(far / (3.0 * n));
        if let Ok(body) = ConvexBody::polygon(&mapped) {
            rep.inner_depth = rep.inner_depth.min(body.depth(&[0.0, 0.0]));
        }
        if far > 3.0 * n * (1.0 + 1e-6) {
            return Err(SectionError::InclusionViolation { node: x, height: 2.0 * t, tau: 2.0, witness: tm.apply_inverse2(mapped[0]) });
        }
        rep.samples += 1;
    }
    rep.theta = 1.0;
    for &(x, y, t) in pairs {
        let (sx, sy) = (section(u, x, t)?, section(u, y, t)?);
        let (Some(rx), Some(ry)) = (sx.region.as_ref(), sy.region.as_ref()) else { continue };
        if !rx.intersects(ry) {
            continue;
        }
        let ux = u.value(x);
        let mut th: f64 = 1.0;
        for q in sy.boundary_points() {
            if let Some(g) = excess(u, sx.x, ux, sx.slope, q) {
                th = th.max(g / t);
            }
        }
        rep.theta = rep.theta.max(th);
        rep.pairs += 1;
    }
    if rep.inner_depth.is_infinite() {
        rep.inner_depth = 0.0;
    }
    Ok(rep)
}

/// Checks that sections at increasing `heights` are nested; returns the
/// number of comparisons made.
pub fn check_monotone(u: &PLConvexFunction, center: usize, heights: &[f64]) -> Result<usize, SectionError> {
    let mut hs = heights.to_vec();
    hs.sort_by(f64::total_cmp);
    let mut prev: Option<Section> = None;
    let mut checks = 0;
    for &t in &hs {
        let s = section_with_rays(u, center, t, 128)?;
        if let Some(p) = &prev {
            ray_violation(p, &s, 1.0, center, t, 1.0)?;
            checks += 1;
        }
        prev = Some(s);
    }
    Ok(checks)
}

/// Pairs `(x, y, t)` for engulfing: for each sample, up to `per` nodes `y`
/// with `g_x(y) <= 4t`, the range where sections of equal height can meet
/// for nearly quadratic `u`.
pub fn engulfing_pairs(u: &PLConvexFunction, samples: &[(usize, f64)], per: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for &(x, t) in samples {
        let Ok(s) = section(u, x, 4.0 * t) else { continue };
        let mut cand: Vec<(usize, f64)> = s.nodes.iter().copied().filter(|&(y, _)| y != x).collect();
        // Farthest first: those pairs bound θ.
        cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let step = (cand.len() / per.max(1)).max(1);
        out.extend(cand.iter().step_by(step).take(per).map(|&(y, _)| (x, y, t)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use std::sync::Arc;

    fn quad() -> PLConvexFunction {
        let body = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 256);
        let g = Arc::new(Grid::on_domain(&body, 1.0 / 64.0).unwrap());
        PLConvexFunction::from_fn(g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1] - 1.0)).unwrap()
    }

    #[test]
    fn quadratic_constants_match_closed_form() {
        let u = quad();
        let g = u.grid();
        let samples: Vec<(usize, f64)> =
            [(0, 0), (5, -3), (-10, 8), (12, 12)].iter().map(|&(i, j)| (g.node_at(i, j).unwrap(), 0.02)).collect();
        let taus = [0.25, 0.5, 0.75, 1.0];
        let pairs = engulfing_pairs(&u, &samples, 10);
        let rep = verify_engulfing(&u, &samples, &taus, &pairs).unwrap();
        assert_eq!(rep.samples, 4);
        for (tau, b) in taus.iter().zip(&rep.beta) {
            assert!((b - tau.sqrt()).abs() <= 0.05 * tau.sqrt(), "tau {tau} beta {b}");
        }
        assert!(rep.pairs > 10);
        assert!(rep.theta <= 9.0 * 1.05 && rep.theta > 5.0, "{}", rep.theta);
        assert!(rep.outer_ratio <= 1.0 && rep.inner_depth >= 1.0 - 1e-6);
    }

    #[test]
    fn nested_heights() {
        let u = quad();
        let c = u.grid().node_at(4, 1).unwrap();
        let hs: Vec<f64> = (1..=20).map(|k| 0.005 * k as f64).collect();
        assert_eq!(check_monotone(&u, c, &hs).unwrap(), 19);
    }
}
