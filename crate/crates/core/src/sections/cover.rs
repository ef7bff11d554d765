//! Greedy Vitali-type covers by sections and their overlap profiles.

use serde::{Deserialize, Serialize};

use super::section::section;
use super::SectionError;
use crate::geometry::PLConvexFunction;

/// Shrinking used by the selection rule.
pub const EPS0: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapProfile {
    pub eps: f64,
    /// `max_x Σ_k χ_{S(x_k, (1−ε)t_k)}(x)` over grid nodes.
    pub max_count: u32,
    /// `max_count / |log ε|`.
    pub k: f64,
    /// Nonzero counts as `(node, count)`.
    pub counts: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverResult {
    /// Selected `(center, height)`, in selection order.
    pub selected: Vec<(usize, f64)>,
    pub eps0: f64,
    pub profiles: Vec<OverlapProfile>,
    /// Largest `K_ε` over the tested `ε`: the overlap bound holds with it.
    pub k: f64,
    /// `max K_ε / min K_ε` over tested `ε <= ε₀`.
    pub drift: f64,
    /// `max K_ε / min K_ε` over every tested `ε`.
    pub drift_all: f64,
}

impl CoverResult {
    /// Overlap profile as CSV with columns `node_id,overlap_count`.
    pub fn profile_csv(&self, eps: f64) -> Option<String> {
        let p = self.profiles.iter().find(|p| p.eps == eps)?;
        let mut s = String::from("node_id,overlap_count\n");
        for (n, c) in &p.counts {
            s.push_str(&format!("{n},{c}\n"));
        }
        Some(s)
    }
}

/// Covers the candidate centers `(node, t_node)` by a subfamily of their
/// sections.
///
/// Candidates are visited by decreasing height, ties broken by center
/// coordinates and then node id. A candidate is selected unless its center
/// already lies in `S(x_k, (1−ε₀)t_k)` for a selected `k`, so every
/// candidate center ends up in some selected section.
pub fn cover(u: &PLConvexFunction, candidates: &[(usize, f64)], eps: &[f64]) -> Result<CoverResult, SectionError> {
    let grid = u.grid();
    let mut order = candidates.to_vec();
    order.sort_by(|a, b| {
        let (pa, pb) = (grid.pos(a.0), grid.pos(b.0));
        b.1.total_cmp(&a.1).then(pa[0].total_cmp(&pb[0])).then(pa[1].total_cmp(&pb[1])).then(a.0.cmp(&b.0))
    });
    let mut blocked = vec![false; grid.len()];
    let mut covered = vec![false; grid.len()];
    let mut counts = vec![vec![0u32; grid.len()]; eps.len()];
    let mut selected = Vec::new();
    for &(c, t) in &order {
        if blocked[c] {
            continue;
        }
        let s = section(u, c, t)?;
        for &(n, g) in &s.nodes {
            covered[n] = true;
            if g <= (1.0 - EPS0) * t {
                blocked[n] = true;
            }
            for (k, &e) in eps.iter().enumerate() {
                if g <= (1.0 - e) * t {
                    counts[k][n] += 1;
                }
            }
        }
        selected.push((c, t));
    }
    if let Some(&(n, _)) = candidates.iter().find(|(n, _)| !covered[*n]) {
        return Err(SectionError::NotCovered { node: n });
    }
    let profiles: Vec<OverlapProfile> = eps
        .iter()
        .zip(counts)
        .map(|(&e, c)| {
            let max_count = c.iter().copied().max().unwrap_or(0);
            OverlapProfile {
                eps: e,
                max_count,
                k: max_count as f64 / e.ln().abs(),
                counts: c.into_iter().enumerate().filter(|&(_, v)| v > 0).collect(),
            }
        })
        .collect();
    let spread = |ps: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = ps.fold((f64::INFINITY, 0.0f64), |(lo, hi), k| (lo.min(k), hi.max(k)));
        if lo > 0.0 && lo.is_finite() { hi / lo } else { f64::INFINITY }
    };
    let k = profiles.iter().map(|p| p.k).fold(0.0, f64::max);
    let drift = spread(&mut profiles.iter().filter(|p| p.eps <= EPS0).map(|p| p.k));
    let drift_all = spread(&mut profiles.iter().map(|p| p.k));
    Ok(CoverResult { selected, eps0: EPS0, profiles, k, drift, drift_all })
}
