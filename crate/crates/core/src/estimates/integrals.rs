//! `L log^k L` integrals of `‖D²u‖`, the key level-set estimate and the
//! layer-cake rewrite behind the main bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{polygon_area, ConvexBody, PLConvexFunction};

use super::EstimateError;

/// Log-space quadrature points of the layer-cake rewrite.
pub const LAYER_CAKE_POINTS: usize = 4000;

/// `g = ‖D²u‖` at the nodes whose dual cells meet a region, weighted by the
/// clipped dual-cell area.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionField {
    pub nodes: Vec<usize>,
    pub g: Vec<f64>,
    pub area: Vec<f64>,
    /// Clipped area of cells whose node has no fitted Hessian.
    pub missing_area: f64,
}

impl RegionField {
    pub fn new(u: &PLConvexFunction, region: &ConvexBody) -> Self {
        let grid = u.grid();
        let reach = grid.lattice().window_radius(1);
        let rows: Vec<(usize, f64, Option<f64>)> = grid
            .interior_nodes()
            .into_par_iter()
            .filter(|&i| region.depth(&grid.pos(i)) >= -reach)
            .filter_map(|i| {
                let cell = grid.dual_cell(i, Some(region));
                let a = if cell.len() < 3 { 0.0 } else { polygon_area(&cell) };
                (a > 0.0).then(|| (i, a, u.hessian_norm(i)))
            })
            .collect();
        let mut f = RegionField { nodes: Vec::new(), g: Vec::new(), area: Vec::new(), missing_area: 0.0 };
        for (i, a, h) in rows {
            match h {
                Some(h) => {
                    f.nodes.push(i);
                    f.g.push(h);
                    f.area.push(a);
                }
                None => f.missing_area += a,
            }
        }
        f
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }

    /// `∫ g log^k(2 + g)`.
    pub fn llogk(&self, k: u32) -> f64 {
        self.g.iter().zip(&self.area).map(|(g, a)| g * (2.0 + g).ln().powi(k as i32) * a).sum()
    }

    /// `|{g >= level}|`.
    pub fn measure_above(&self, level: f64) -> f64 {
        self.g.iter().zip(&self.area).filter(|(g, _)| **g >= level).map(|(_, a)| a).sum()
    }

    /// `∫_{g >= level} g`.
    pub fn mass_above(&self, level: f64) -> f64 {
        self.g.iter().zip(&self.area).filter(|(g, _)| **g >= level).map(|(g, a)| g * a).sum()
    }

    pub fn max(&self) -> f64 {
        self.g.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.g.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `∫_region ‖D²u‖ log^k(2 + ‖D²u‖)` by clipped dual-cell quadrature.
pub fn llogk_integral(u: &PLConvexFunction, region: &ConvexBody, k: u32) -> f64 {
    RegionField::new(u, region).llogk(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub level: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Rung {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else {
            f64::INFINITY
        }
    }
}

/// A dyadic scan of `lhs(γ) <= C·rhs(γ)`: the smallest rung from which
/// every ratio is finite, and the worst ratio from there on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub rungs: Vec<Rung>,
    pub threshold: f64,
    pub constant: f64,
    /// Level factor on the right-hand side.
    pub level_factor: f64,
}

/// Dyadic levels from just below `lo` up to the first level above `hi`.
pub(crate) fn dyadic_ladder(lo: f64, hi: f64) -> Vec<f64> {
    if !(lo > 0.0 && lo.is_finite() && hi >= lo) {
        return Vec::new();
    }
    let mut j = lo.log2().floor() as i32;
    let mut out = Vec::new();
    loop {
        let g = 2f64.powi(j);
        out.push(g);
        if g > hi || out.len() > 200 {
            return out;
        }
        j += 1;
    }
}

pub(crate) fn scan(rungs: Vec<Rung>, level_factor: f64) -> ThresholdScan {
    let last_bad = rungs.iter().rposition(|r| !r.ratio().is_finite());
    let start = last_bad.map_or(0, |i| i + 1);
    let threshold = rungs.get(start).map_or(f64::INFINITY, |r| r.level);
    let constant = rungs[start.min(rungs.len())..].iter().map(Rung::ratio).fold(0.0, f64::max);
    ThresholdScan { rungs, threshold, constant, level_factor }
}

/// `∫_{inner ∩ {g >= γ}} g <= c′ γ |{x ∈ outer : g >= c″γ}|` along a dyadic
/// ladder, with `c″ = 1/2`.
pub fn key_estimate(inner: &RegionField, outer: &RegionField) -> ThresholdScan {
    const C2: f64 = 0.5;
    let rungs = dyadic_ladder(inner.min(), inner.max())
        .into_iter()
        .map(|gamma| Rung { level: gamma, lhs: inner.mass_above(gamma), rhs: gamma * outer.measure_above(C2 * gamma) })
        .take_while(|r| r.lhs > 0.0)
        .collect();
    scan(rungs, C2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerCake {
    pub k: u32,
    pub cbar: f64,
    /// `∫_{g >= c̄} g log^{k+1} g`.
    pub direct: f64,
    /// `log^{k+1}(c̄)∫_{g >= c̄} g + (k+1)∫_{c̄}^∞ γ⁻¹log^k γ ∫_{g >= γ} g dγ`.
    pub fubini: f64,
    pub deviation: f64,
    /// `I_{k+1} <= log^{k+1}(2 + c̄)∫_{g <= c̄} g + 2^{k+1}∫_{g >= c̄} g log^{k+1} g`.
    pub split_holds: bool,
}

/// Replays the Fubini rewrite of `∫_{g >= c̄} g log^{k+1} g` by trapezoid
/// quadrature in `log γ`.
pub fn layer_cake(field: &RegionField, k: u32, cbar: f64) -> LayerCake {
    let kp = k as i32 + 1;
    let direct: f64 =
        field.g.iter().zip(&field.area).filter(|(g, _)| **g >= cbar).map(|(g, a)| g * g.ln().powi(kp) * a).sum();
    let gmax = field.max();
    let mut fubini = cbar.ln().powi(kp) * field.mass_above(cbar);
    if gmax > cbar {
        // Sorted levels make every tail evaluation a suffix sum.
        let mut pairs: Vec<(f64, f64)> = field.g.iter().zip(&field.area).map(|(g, a)| (*g, g * a)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut suffix = vec![0.0; pairs.len() + 1];
        for i in (0..pairs.len()).rev() {
            suffix[i] = suffix[i + 1] + pairs[i].1;
        }
        let tail = |gamma: f64| suffix[pairs.partition_point(|p| p.0 < gamma)];
        let (s0, s1) = (cbar.ln(), gmax.ln());
        let ds = (s1 - s0) / LAYER_CAKE_POINTS as f64;
        let mut acc = 0.0;
        for m in 0..=LAYER_CAKE_POINTS {
            let s = s0 + m as f64 * ds;
            let w = if m == 0 || m == LAYER_CAKE_POINTS { 0.5 } else { 1.0 };
            acc += w * s.powi(k as i32) * tail(s.exp());
        }
        fubini += (k + 1) as f64 * acc * ds;
    }
    let deviation = if direct > 0.0 { (direct - fubini).abs() / direct } else { (direct - fubini).abs() };
    let below: f64 = field.g.iter().zip(&field.area).filter(|(g, _)| **g <= cbar).map(|(g, a)| g * a).sum();
    // log(2 + g) <= 2 log g once g >= 2.
    let split_holds =
        field.llogk(k + 1) <= ((2.0 + cbar).ln().powi(kp) * below + 2f64.powi(kp) * direct) * (1.0 + 1e-12);
    LayerCake { k, cbar, direct, fubini, deviation, split_holds }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MainResult {
    pub k: u32,
    /// `I_{k+1}(U/2)`.
    pub inner: f64,
    /// `I_k(3U/4)`.
    pub outer: f64,
    pub ratio: f64,
    pub layer_cake: LayerCake,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MainReport {
    pub key: ThresholdScan,
    /// `max(2, key.threshold)`.
    pub cbar: f64,
    pub results: Vec<MainResult>,
    pub missing_area: f64,
}

/// `I_{k+1}(inner)/I_k(outer)` for each `k`, with the key estimate and the
/// layer-cake replay.
pub fn verify_main_fields(inner: &RegionField, outer: &RegionField, ks: &[u32]) -> Result<MainReport, EstimateError> {
    if inner.g.is_empty() || outer.g.is_empty() {
        return Err(EstimateError::InvalidInput("regions hold no Hessian nodes".into()));
    }
    let key = key_estimate(inner, outer);
    let cbar = key.threshold.max(2.0);
    let results = ks
        .iter()
        .map(|&k| {
            let (a, b) = (inner.llogk(k + 1), outer.llogk(k));
            MainResult { k, inner: a, outer: b, ratio: a / b, layer_cake: layer_cake(inner, k, cbar) }
        })
        .collect();
    Ok(MainReport { key, cbar, results, missing_area: inner.missing_area + outer.missing_area })
}

pub fn verify_main(u: &PLConvexFunction, inner: &ConvexBody, outer: &ConvexBody, ks: &[u32]) -> Result<MainReport, EstimateError> {
    verify_main_fields(&RegionField::new(u, inner), &RegionField::new(u, outer), ks)
}
