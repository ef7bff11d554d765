//! The section maximal function of `‖D²u‖` on a dyadic height ladder.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::section::section;
use super::SectionError;
use crate::geometry::{ConvexBody, PLConvexFunction};

/// Smallest number of Hessian nodes a ladder rung must hold.
pub const MIN_RUNG_NODES: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaximalField {
    pub rho: f64,
    /// Sorted by node.
    pub values: Vec<MaximalValue>,
    /// Rungs without any Hessian node, as `(node, height)`; skipped.
    pub empty_rungs: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalValue {
    pub node: usize,
    /// `M(node)`.
    pub value: f64,
    /// Height of the rung attaining the maximum.
    pub height: f64,
    pub rungs: usize,
}

impl MaximalField {
    pub fn get(&self, node: usize) -> Option<f64> {
        self.entry(node).map(|v| v.value)
    }

    pub fn entry(&self, node: usize) -> Option<&MaximalValue> {
        self.values.binary_search_by_key(&node, |v| v.node).ok().map(|i| &self.values[i])
    }
}

/// `M(x) = max_j ⨍_{S(x, ρ/2^j)} ‖D²u‖` for interior nodes `x` of `region`,
/// averaging over the Hessian nodes of each section and descending while a
/// rung keeps at least [`MIN_RUNG_NODES`] of them.
pub fn maximal_field(u: &PLConvexFunction, region: &ConvexBody, rho: f64) -> Result<MaximalField, SectionError> {
    let centers = u.nodes_in(region, 0.0);
    let per: Vec<Result<(MaximalValue, Vec<f64>), SectionError>> = centers
        .par_iter()
        .map(|&x| {
            let s = section(u, x, rho)?;
            let mut vals: Vec<(f64, f64)> =
                s.nodes.iter().filter_map(|&(n, g)| u.hessian_norm(n).map(|h| (g, h))).collect();
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut prefix = Vec::with_capacity(vals.len() + 1);
            prefix.push(0.0);
            for (_, h) in &vals {
                prefix.push(prefix.last().unwrap() + h);
            }
            let (mut best, mut at, mut used, mut empty) = (f64::NAN, rho, 0, Vec::new());
            let mut t = rho;
            loop {
                let m = vals.partition_point(|v| v.0 <= t);
                if m == 0 {
                    empty.push(t);
                } else {
                    let avg = prefix[m] / m as f64;
                    if best.is_nan() || avg > best {
                        (best, at) = (avg, t);
                    }
                    used += 1;
                }
                t *= 0.5;
                if vals.partition_point(|v| v.0 <= t) < MIN_RUNG_NODES || used + empty.len() >= 60 {
                    break;
                }
            }
            Ok((MaximalValue { node: x, value: best, height: at, rungs: used }, empty))
        })
        .collect();
    let mut out = MaximalField { rho, values: Vec::with_capacity(per.len()), empty_rungs: Vec::new() };
    for r in per {
        let (v, empty) = r?;
        out.empty_rungs.extend(empty.into_iter().map(|t| (v.node, t)));
        if v.rungs > 0 {
            out.values.push(v);
        }
    }
    Ok(out)
}
