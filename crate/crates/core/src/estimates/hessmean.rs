//! Section averages of `‖D²u‖` against the size of the normalizing map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{operator_norm, unit_ball_volume, PLConvexFunction};

use super::normalized::normalize_section_on;
use super::EstimateError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessmeanSample {
    pub center: usize,
    pub height: f64,
    /// `‖T‖‖T*‖ / det T`.
    pub shape: f64,
    /// `⨍_{S(x,t)} ‖D²u‖` over Hessian nodes.
    pub average: f64,
    pub ratio: f64,
    /// `|inf_Z v| = t·det T`.
    pub inf_v: f64,
    /// `sup_{T(S(x,t))} |∇v|`.
    pub gradient: f64,
    pub law_deviation: Option<f64>,
    /// `|∫Δv − ∮∇v·ν| / |∮∇v·ν|`.
    pub divergence_deviation: Option<f64>,
    /// `det T·|S| / ω_n`, within `[1, n^n]` for a normalizing `T`.
    pub det_volume: f64,
    /// `|‖T*T‖ − ‖T‖‖T*‖| / ‖T*T‖`.
    pub norm_identity: f64,
    /// `max |v|` on `∂Z` relative to `|inf v|`.
    pub boundary_deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessmeanReport {
    pub samples: Vec<HessmeanSample>,
    /// Skipped `(center, height, reason)`.
    pub skipped: Vec<(usize, f64, String)>,
    /// `inf ratio`.
    pub c1: f64,
    /// `sup |∇v|` over samples.
    pub gradient_bound: f64,
    /// `[min, max]` of `|inf_Z v|`.
    pub alex_band: [f64; 2],
    pub law_max: f64,
    pub divergence_max: f64,
    pub divergence_checked: usize,
}

fn one(u: &PLConvexFunction, x: usize, t: f64) -> Result<HessmeanSample, EstimateError> {
    let nv = normalize_section_on(u, x, t, 2.0)?;
    let hs: Vec<f64> = nv.section.nodes.iter().filter_map(|&(n, _)| u.hessian_norm(n)).collect();
    if hs.is_empty() {
        return Err(EstimateError::DegenerateSection { node: x, height: t });
    }
    let average = hs.iter().sum::<f64>() / hs.len() as f64;
    let shape = nv.shape_factor();
    let a = nv.map.linear();
    let tt = operator_norm(&(a.transpose() * a));
    let norm_identity = (tt - nv.map.norm() * nv.map.norm_adjoint()).abs() / tt;
    let det_volume = nv.map.det() * nv.section.area() / unit_ball_volume(2);
    let inf_abs = -nv.inf_v;
    let boundary_deviation = nv
        .section
        .boundary_points()
        .iter()
        .filter_map(|q| nv.v.eval(nv.map.apply2(*q)))
        .fold(0.0f64, |m, v| m.max(v.abs()))
        / inf_abs;
    let divergence_deviation = nv.divergence_pair(u).map(|(i, f)| (i - f).abs() / f.abs());
    Ok(HessmeanSample {
        center: x,
        height: t,
        shape,
        average,
        ratio: shape / average,
        inf_v: inf_abs,
        gradient: nv.gradient_bound(),
        law_deviation: nv.transformation_law_deviation(u),
        divergence_deviation,
        det_volume,
        norm_identity,
        boundary_deviation,
    })
}

/// Measures `‖T‖‖T*‖/det T ≥ C₁ ⨍_{S(x,t)} ‖D²u‖` at every sample `(x, t)`,
/// with `v` built on `T(S(x, 2t))`. Degenerate sections are skipped.
pub fn verify_hessmean(u: &PLConvexFunction, samples: &[(usize, f64)]) -> Result<HessmeanReport, EstimateError> {
    let results: Vec<Result<HessmeanSample, EstimateError>> = samples.par_iter().map(|&(x, t)| one(u, x, t)).collect();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (r, &(x, t)) in results.into_iter().zip(samples) {
        match r {
            Ok(s) => out.push(s),
            Err(e @ (EstimateError::DegenerateSection { .. } | EstimateError::Geometry(_))) => skipped.push((x, t, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(EstimateError::InvalidInput("no usable section sample".into()));
    }
    let c1 = out.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    let gradient_bound = out.iter().map(|s| s.gradient).fold(0.0, f64::max);
    let lo = out.iter().map(|s| s.inf_v).fold(f64::INFINITY, f64::min);
    let hi = out.iter().map(|s| s.inf_v).fold(0.0, f64::max);
    let law_max = out.iter().filter_map(|s| s.law_deviation).fold(0.0, f64::max);
    let divs: Vec<f64> = out.iter().filter_map(|s| s.divergence_deviation).collect();
    Ok(HessmeanReport {
        c1,
        gradient_bound,
        alex_band: [lo, hi],
        law_max,
        divergence_max: divs.iter().copied().fold(0.0, f64::max),
        divergence_checked: divs.len(),
        samples: out,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexBody, Grid};
    use std::sync::Arc;

    fn quad(a: f64, b: f64) -> PLConvexFunction {
        let body = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 256);
        let g = Arc::new(Grid::on_domain(&body, 1.0 / 64.0).unwrap());
        PLConvexFunction::from_fn(g, |p| 0.5 * (a * p[0] * p[0] + b * p[1] * p[1] - 1.0)).unwrap()
    }

    #[test]
    fn quadratic_ratio_is_one() {
        for (a, b) in [(1.0, 1.0), (4.0, 0.25), (0.25, 4.0)] {
            let u = quad(a, b);
            let g = u.grid();
            let samples: Vec<(usize, f64)> = [(0, 0), (6, -4), (-8, 3)].iter().map(|&(i, j)| (g.node_at(i, j).unwrap(), 0.02)).collect();
            let r = verify_hessmean(&u, &samples).unwrap();
            assert_eq!(r.samples.len(), 3);
            for s in &r.samples {
                assert!((s.ratio - 1.0).abs() < 0.05, "{a} {b}: {}", s.ratio);
                assert!((s.inf_v - 0.5).abs() < 0.02);
                assert!(s.gradient < 1.1);
                assert!(s.det_volume >= 1.0 - 1e-9 && s.det_volume <= 4.0 + 1e-9);
                assert!(s.norm_identity < 1e-12);
                assert!(s.law_deviation.unwrap() < 1e-8);
                assert!(s.boundary_deviation < 0.05, "{}", s.boundary_deviation);
            }
        }
    }
}
