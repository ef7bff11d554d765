//! Measured section-geometry constants for a nested pair `Ω′ ⊂⊂ Ω″`.

use serde::{Deserialize, Serialize};

use super::cover::{cover, CoverResult, EPS0};
use super::engulf::{check_monotone, engulfing_pairs, verify_engulfing};
use super::height::safe_height;
use super::sampling::sample_centers;
use super::SectionError;
use crate::geometry::{ConvexBody, PLConvexFunction};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasOptions {
    pub centers: usize,
    /// Heights `ρ/2^j` for `j < ladder` at every center.
    pub ladder: usize,
    pub taus: Vec<f64>,
    pub pairs_per_center: usize,
    pub monotone_centers: usize,
    pub monotone_heights: usize,
    pub cover_eps: Vec<f64>,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        Self {
            centers: 100,
            ladder: 4,
            taus: vec![0.125, 0.25, 0.5, 0.75],
            pairs_per_center: 4,
            monotone_centers: 100,
            monotone_heights: 20,
            cover_eps: vec![0.5, 0.1, 0.01],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionAtlas {
    pub schema: String,
    pub rho: f64,
    pub taus: Vec<f64>,
    pub beta: Vec<f64>,
    pub theta: f64,
    pub eps0: f64,
    /// Filled in from the contact-set measurement.
    pub eps1: Option<f64>,
    pub eps2: f64,
    pub k: f64,
    pub k_drift: f64,
    pub k_drift_all: f64,
    pub cover_size: usize,
    /// Sampled `(x, t)` that passed every inclusion check.
    pub samples: usize,
    pub pairs: usize,
    pub monotone_checks: usize,
    pub outer_ratio: f64,
    pub inner_depth: f64,
}

impl SectionAtlas {
    /// Records `ε₁` and sets `ε₂ = min(ε₀, ε₁)`.
    pub fn set_eps1(&mut self, eps1: f64) {
        self.eps1 = Some(eps1);
        self.eps2 = self.eps0.min(eps1);
    }
}

/// Safe height, inclusion chains, engulfing and the covering profile of
/// `u` over `inner ⊂⊂ outer`.
pub fn build_atlas(
    u: &PLConvexFunction,
    inner: &ConvexBody,
    outer: &ConvexBody,
    opts: &AtlasOptions,
) -> Result<(SectionAtlas, CoverResult), SectionError> {
    let rho = safe_height(u, inner, outer)?;
    let centers = sample_centers(u, inner, opts.centers);
    let samples: Vec<(usize, f64)> = centers
        .iter()
        .flat_map(|&c| (0..opts.ladder).map(move |j| (c, rho / f64::powi(2.0, j as i32))))
        .collect();
    let mut pairs = engulfing_pairs(u, &centers.iter().map(|&c| (c, rho / 4.0)).collect::<Vec<_>>(), opts.pairs_per_center);
    pairs.retain(|&(_, y, _)| inner.contains(&u.grid().pos(y), 0.0));
    let eng = verify_engulfing(u, &samples, &opts.taus, &pairs)?;
    let heights: Vec<f64> = (1..=opts.monotone_heights).map(|k| 2.0 * rho * k as f64 / opts.monotone_heights as f64).collect();
    let mut monotone_checks = 0;
    for &c in centers.iter().take(opts.monotone_centers) {
        monotone_checks += check_monotone(u, c, &heights)?;
    }
    let candidates: Vec<(usize, f64)> = u.nodes_in(inner, 0.0).into_iter().map(|n| (n, rho)).collect();
    let cov = cover(u, &candidates, &opts.cover_eps)?;
    let atlas = SectionAtlas {
        schema: crate::SCHEMA.into(),
        rho,
        taus: eng.taus,
        beta: eng.beta,
        theta: eng.theta,
        eps0: EPS0,
        eps1: None,
        eps2: EPS0,
        k: cov.k,
        k_drift: cov.drift,
        k_drift_all: cov.drift_all,
        cover_size: cov.selected.len(),
        samples: eng.samples,
        pairs: eng.pairs,
        monotone_checks,
        outer_ratio: eng.outer_ratio,
        inner_depth: eng.inner_depth,
    };
    Ok((atlas, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use std::sync::Arc;

    #[test]
    fn quadratic_atlas() {
        let body = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 200);
        let g = Arc::new(Grid::on_domain(&body, 1.0 / 32.0).unwrap());
        let u = PLConvexFunction::from_fn(g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1] - 1.0)).unwrap();
        let inner = ConvexBody::circumscribed_disc([0.0, 0.0], 0.5, 100);
        let outer = ConvexBody::circumscribed_disc([0.0, 0.0], 0.75, 150);
        let opts = AtlasOptions { centers: 20, monotone_centers: 5, ..Default::default() };
        let (mut a, cov) = build_atlas(&u, &inner, &outer, &opts).unwrap();
        assert_eq!(a.samples, 80);
        // Coarse grid: the smallest ladder sections span two cells.
        for (t, b) in a.taus.iter().zip(&a.beta) {
            assert!(*b > 0.0 && *b < 1.0 && (b - t.sqrt()).abs() < 0.1 * t.sqrt());
        }
        assert!(a.theta > 1.0 && a.theta <= 9.0 * 1.05);
        assert_eq!(a.cover_size, cov.selected.len());
        a.set_eps1(0.05);
        assert_eq!(a.eps2, 0.05);
        let back: SectionAtlas = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back.rho, a.rho);
    }
}
