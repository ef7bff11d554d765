//! Safe heights: the largest `ρ` with `S(x, 2ρ) ⊂ Ω″` for every node of `Ω′`.

use rayon::prelude::*;

use super::section::section;
use super::SectionError;
use crate::geometry::{ConvexBody, PLConvexFunction};

/// Values of the interpolant on the boundary of `outer`, sampled at a
/// quarter of the grid step.
fn boundary_samples(u: &PLConvexFunction, outer: &ConvexBody) -> Vec<([f64; 2], f64)> {
    let h = u.grid().step();
    let domain = u.domain();
    crate::geometry::grid::sample_boundary(&outer.vertices_2d(), 0.25 * h)
        .into_iter()
        .filter_map(|z| match u.eval(z) {
            Some(v) => Some((z, v)),
            // Points on the domain boundary carry the Dirichlet value.
            None if domain.depth(&z).abs() <= 1e-9 * h => Some((z, 0.0)),
            None => None,
        })
        .collect()
}

/// `ρ(Ω′, Ω″)`: every interior node `x ∈ Ω′` has `S(x, 2ρ) ⊂ Ω″`.
///
/// The bound `2ρ <= min_x min_{z ∈ ∂Ω″} g_x(z)` is screened from boundary
/// samples and then confirmed on the most constrained centers by tracing
/// their sections, shrinking by bisection if a traced section leaves `Ω″`.
pub fn safe_height(u: &PLConvexFunction, inner: &ConvexBody, outer: &ConvexBody) -> Result<f64, SectionError> {
    let grid = u.grid();
    let h = grid.step();
    if inner.vertices().any(|v| outer.depth(v) <= 1e-9 * h) {
        return Err(SectionError::NoPositiveHeight("inner region is not compactly contained".into()));
    }
    if outer.vertices().any(|v| !u.domain().contains(v, 1e-9 * h)) {
        return Err(SectionError::NoPositiveHeight("outer region leaves the domain".into()));
    }
    let centers = u.nodes_in(inner, 0.0);
    if centers.is_empty() {
        return Err(SectionError::NoPositiveHeight("no grid node in the inner region".into()));
    }
    let samples = boundary_samples(u, outer);
    let mut margins: Vec<(f64, usize)> = centers
        .par_iter()
        .map(|&c| {
            let (x, ux, p) = (grid.pos(c), u.value(c), u.gradient(c));
            let m = samples
                .iter()
                .map(|(z, uz)| uz - ux - p[0] * (z[0] - x[0]) - p[1] * (z[1] - x[1]))
                .fold(f64::INFINITY, f64::min);
            (m, c)
        })
        .collect();
    margins.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let rho = 0.5 * margins[0].0;
    if !(rho > 0.0) {
        return Err(SectionError::NoPositiveHeight(format!("screened height {rho:e}")));
    }
    let binding: Vec<usize> = margins.iter().take(8).map(|m| m.1).collect();
    let fits = |r: f64| {
        binding.iter().all(|&c| match section(u, c, 2.0 * r) {
            Ok(s) => s.boundary_points().iter().all(|q| outer.depth(q) >= -1e-12 * (1.0 + h)),
            Err(_) => false,
        })
    };
    if fits(rho) {
        return Ok(rho);
    }
    let (mut lo, mut hi) = (0.0, rho);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > 0.0 {
        Ok(lo)
    } else {
        Err(SectionError::NoPositiveHeight("every traced height escapes".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use std::sync::Arc;

    fn scaled(c: f64, h: f64) -> PLConvexFunction {
        let body = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 400);
        let g = Arc::new(Grid::on_domain(&body, h).unwrap());
        PLConvexFunction::from_fn(g, |p| 0.5 * c * (p[0] * p[0] + p[1] * p[1] - 1.0)).unwrap()
    }

    #[test]
    fn quadratic_height_is_one_sixty_fourth() {
        let u = scaled(1.0, 1.0 / 64.0);
        let inner = ConvexBody::circumscribed_disc([0.0, 0.0], 0.5, 200);
        let outer = ConvexBody::circumscribed_disc([0.0, 0.0], 0.75, 300);
        let rho = safe_height(&u, &inner, &outer).unwrap();
        assert!((rho - 1.0 / 64.0).abs() < 0.05 / 64.0, "{rho}");
        let rho2 = safe_height(&scaled(3.0, 1.0 / 64.0), &inner, &outer).unwrap();
        assert!((rho2 / rho - 3.0).abs() < 1e-6);
    }

    #[test]
    fn equal_regions_have_no_height() {
        let u = scaled(1.0, 1.0 / 16.0);
        let inner = ConvexBody::circumscribed_disc([0.0, 0.0], 0.5, 40);
        assert!(matches!(safe_height(&u, &inner, &inner), Err(SectionError::NoPositiveHeight(_))));
    }
}
