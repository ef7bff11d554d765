//! Level sets of the section maximal function against level sets of
//! `‖D²u‖`, and the maximal inequality.

use serde::{Deserialize, Serialize};

use crate::geometry::PLConvexFunction;
use crate::sections::{cover, section, MaximalField};

use super::integrals::{dyadic_ladder, scan, RegionField, Rung, ThresholdScan};
use super::EstimateError;

/// Level factor of the maximal inequality's right-hand side.
pub const MAXIMAL_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelsetReport {
    /// `|{M >= γ} ∩ U/2|` against `|{‖D²u‖ >= C₅γ} ∩ 3U/4|`.
    pub rungs: Vec<Rung>,
    pub c4: f64,
    pub c5: f64,
    /// `∫_{U/2 ∩ {‖D²u‖ >= α}} ‖D²u‖` against `α|{M >= C″α} ∩ U/2|`:
    /// threshold `α₀`, constant `C′`, level `C″`.
    pub maximal: ThresholdScan,
}

/// `M` and its area weights over the nodes of `inner` where it is defined.
fn weighted_m(field: &MaximalField, inner: &RegionField) -> Vec<(f64, f64)> {
    inner.nodes.iter().zip(&inner.area).filter_map(|(&n, &a)| field.get(n).map(|m| (m, a))).collect()
}

fn m_measure(m: &[(f64, f64)], level: f64) -> f64 {
    m.iter().filter(|p| p.0 >= level).map(|p| p.1).sum()
}

/// `C₄` within twice its smallest possible value and the largest dyadic `C₅`
/// for which
/// `|{M >= γ} ∩ U/2| <= C₄|{‖D²u‖ >= C₅γ} ∩ 3U/4|` along a dyadic `γ` ladder,
/// together with the maximal inequality scan.
pub fn verify_levelsets(field: &MaximalField, inner: &RegionField, outer: &RegionField) -> Result<LevelsetReport, EstimateError> {
    let m = weighted_m(field, inner);
    if m.is_empty() {
        return Err(EstimateError::InvalidInput("the maximal function is undefined on the inner region".into()));
    }
    let (lo, hi) = m.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let gammas: Vec<f64> = dyadic_ladder(lo, hi).into_iter().take_while(|&g| m_measure(&m, g) > 0.0).collect();
    let rungs_at = |c5: f64| -> Vec<Rung> {
        gammas.iter().map(|&g| Rung { level: g, lhs: m_measure(&m, g), rhs: outer.measure_above(c5 * g) }).collect()
    };
    // Shrinking C₅ enlarges the right-hand side, so C₄ is smallest at the
    // bottom of the scan. Keep the largest C₅ whose C₄ stays within twice
    // that floor.
    let scans: Vec<(f64, Vec<Rung>, f64)> = (-30..=4)
        .rev()
        .map(|j| {
            let c5 = 2f64.powi(j);
            let rungs = rungs_at(c5);
            let c4 = rungs.iter().map(Rung::ratio).fold(0.0, f64::max);
            (c5, rungs, c4)
        })
        .collect();
    let floor = scans.last().map_or(f64::INFINITY, |s| s.2);
    if !floor.is_finite() {
        return Err(EstimateError::InvalidInput("no level factor keeps the level sets comparable".into()));
    }
    let (c5, rungs, c4) = scans.into_iter().find(|s| s.2 <= 2.0 * floor).expect("the floor itself qualifies");
    let alphas = dyadic_ladder(inner.min(), inner.max());
    let maximal_rungs: Vec<Rung> = alphas
        .into_iter()
        .map(|a| Rung { level: a, lhs: inner.mass_above(a), rhs: a * m_measure(&m, MAXIMAL_LEVEL * a) })
        .take_while(|r| r.lhs > 0.0)
        .collect();
    Ok(LevelsetReport { rungs, c4, c5, maximal: scan(maximal_rungs, MAXIMAL_LEVEL) })
}

/// Measured constants feeding the covering replay.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub eps2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelsetReplay {
    pub gamma: f64,
    /// `|{M >= γ} ∩ U/2|`.
    pub lhs: f64,
    /// Nodes with a section average of at least `γ/2`.
    pub e_nodes: usize,
    pub cover_size: usize,
    /// `Σ_k |S(x_k, t_k)|`.
    pub cover_area: f64,
    /// Largest overlap of the shrunken sections `S(x_k, (1 − ε₂)t_k)`.
    pub overlap: u32,
    /// `overlap / C₂`.
    pub implied_c4: f64,
    /// `|{‖D²u‖ >= C₁C₃γ/2} ∩ 3U/4|`.
    pub rhs: f64,
    pub covers: bool,
    pub holds: bool,
}

/// Rebuilds the level-set bound at `γ` from a covering of
/// `E = {x ∈ U/2 : ⨍_{S(x,t_x)} ‖D²u‖ >= γ/2}` and the measured constants.
pub fn replay_levelsets(
    u: &PLConvexFunction,
    field: &MaximalField,
    inner: &RegionField,
    outer: &RegionField,
    gamma: f64,
    k: &ChainConstants,
) -> Result<LevelsetReplay, EstimateError> {
    let m = weighted_m(field, inner);
    let lhs = m_measure(&m, gamma);
    let candidates: Vec<(usize, f64)> = inner
        .nodes
        .iter()
        .filter_map(|&n| field.entry(n))
        .filter(|v| v.value >= 0.5 * gamma)
        .map(|v| (v.node, v.height))
        .collect();
    let rhs = outer.measure_above(k.c1 * k.c3 * gamma / 2.0);
    if candidates.is_empty() {
        return Ok(LevelsetReplay {
            gamma,
            lhs,
            e_nodes: 0,
            cover_size: 0,
            cover_area: 0.0,
            overlap: 0,
            implied_c4: 0.0,
            rhs,
            covers: lhs == 0.0,
            holds: lhs == 0.0,
        });
    }
    let cov = cover(u, &candidates, &[k.eps2])?;
    let mut cover_area = 0.0;
    for &(x, t) in &cov.selected {
        cover_area += section(u, x, t)?.area();
    }
    let overlap = cov.profiles[0].max_count;
    let implied_c4 = overlap as f64 / k.c2;
    Ok(LevelsetReplay {
        gamma,
        lhs,
        e_nodes: candidates.len(),
        cover_size: cov.selected.len(),
        cover_area,
        overlap,
        implied_c4,
        rhs,
        covers: cover_area >= lhs,
        holds: lhs <= implied_c4 * rhs,
    })
}
