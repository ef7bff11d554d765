//! Contact sets of the convex envelope of `v − p` and the Hessian floor
//! they carry.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{convex_envelope, polygon_area, sym2, AffineMap, HessianStencil, PLConvexFunction};
use crate::sections::section;

use super::normalized::normalize_section;
use super::EstimateError;

/// `(2n)^n / ω_n` in the plane.
pub const ABP_CONSTANT: f64 = 16.0 / PI;

/// Default shrinking grid for the contact fractions.
pub const EPS_GRID: [f64; 8] = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5];

/// Relative PSD tolerance of the envelope domination check.
pub const PSD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactSample {
    pub center: usize,
    pub height: f64,
    pub contact_nodes: usize,
    /// `|E| / |Z|` for each `ε` of the grid: `|E ∩ T(S(x,(1−ε)t))| / |Z|`.
    pub fractions: Vec<f64>,
    /// `min_{y ∈ A} ‖D²u(y)‖ / (‖T‖‖T*‖/det T)`.
    pub floor: f64,
    /// `|inf w|`.
    pub inf_w: f64,
    /// `|inf Γ_w|`.
    pub inf_gamma: f64,
    /// `|∂Γ_w(E)|`.
    pub envelope_image: f64,
    /// `|∂v(E)|`.
    pub v_image: f64,
    /// `|E|`.
    pub contact_area: f64,
    /// `(c₁/2)² <= C(n)·Λ·|E|`.
    pub chain_holds: bool,
    /// Links of the measure chain, in order.
    pub links: [bool; 5],
    pub psd_checked: usize,
    pub psd_violations: usize,
    /// Largest change of `‖T‖‖T*‖/det T` under `T ↦ R∘T`.
    pub rotation_deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupermeanReport {
    pub eps: Vec<f64>,
    pub samples: Vec<ContactSample>,
    pub skipped: Vec<(usize, f64, String)>,
    /// 5th percentile of `|E|/|Z|`.
    pub c_prime: f64,
    pub c2: f64,
    /// Largest `ε` with fraction `>= C₂` on 95% of the samples.
    pub eps1: f64,
    /// 5th percentile of the Hessian floor.
    pub c3: f64,
    /// `D²v >= c₁/n²` on contact nodes: smallest eigenvalue ratio.
    pub min_contact_eig: f64,
    pub chain_holds: usize,
    pub psd_checked: usize,
    pub psd_violations: usize,
    pub rotation_deviation: f64,
}

pub(crate) fn percentile(v: &[f64], q: f64) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    s[((q * (s.len() - 1) as f64).floor() as usize).min(s.len() - 1)]
}

fn rotation(a: f64) -> AffineMap {
    let m = nalgebra::DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
    AffineMap::new(m, nalgebra::DVector::zeros(2)).expect("rotations are invertible")
}

struct ContactOutcome {
    sample: ContactSample,
    min_eig: f64,
}

fn one(u: &PLConvexFunction, x: usize, t: f64, c1: f64, big_lambda: f64, eps: &[f64], seed: u64) -> Result<ContactOutcome, EstimateError> {
    let nv = normalize_section(u, x, t)?;
    let v = &nv.v;
    let vg = v.grid();
    let n_int = vg.n_interior();
    let pts: Vec<[f64; 2]> = (0..n_int).map(|i| vg.pos(i)).collect();
    let p = |z: [f64; 2]| 0.5 * c1 * ((z[0] * z[0] + z[1] * z[1]) / 4.0 - 1.0);
    let w: Vec<f64> = pts.iter().enumerate().map(|(i, &z)| v.value(i) - p(z)).collect();
    let bpts: Vec<[f64; 2]> = vg.boundary_nodes().map(|i| vg.pos(i)).collect();
    let env = convex_envelope(&pts, &w, &bpts, &vec![0.0; bpts.len()])?;
    let contact: Vec<usize> = (0..n_int).filter(|&i| env.contact[i]).collect();
    if contact.is_empty() {
        return Err(EstimateError::EmptyContactSet { node: x, height: t });
    }
    let z = nv.z_body();
    let z_area = z.volume();
    let mut fractions = Vec::with_capacity(eps.len());
    let mut contact_area = 0.0;
    for &e in eps {
        let body = if e == 0.0 {
            z.clone()
        } else {
            let s = section(u, x, (1.0 - e) * t)?;
            match s.region {
                Some(r) => r.map(&nv.map),
                None => {
                    fractions.push(0.0);
                    continue;
                }
            }
        };
        let a: f64 = contact.iter().map(|&i| polygon_area(&vg.dual_cell(i, Some(&body)))).sum();
        if e == 0.0 {
            contact_area = a;
        }
        fractions.push(a / z_area);
    }
    let shape = nv.shape_factor();
    let floor = contact
        .iter()
        .filter_map(|&i| u.hessian_norm(nv.source[i]))
        .fold(f64::INFINITY, f64::min)
        / shape;
    let min_eig = contact
        .iter()
        .filter_map(|&i| v.hessian(i).map(|h| sym2::eigenvalues(h.raw)[0]))
        .fold(f64::INFINITY, f64::min)
        / (c1 / 4.0);
    let inf_w = -w.iter().copied().fold(f64::INFINITY, f64::min);
    let inf_gamma = -env.gamma.iter().copied().fold(f64::INFINITY, f64::min);
    let envelope_image: f64 = contact.iter().map(|&i| env.cells[i].area()).sum();
    let v_image: f64 = contact.iter().map(|&i| v.cell(i).area()).sum();
    let slack = 1e-9;
    let links = [
        (0.5 * c1).powi(2) <= inf_w.powi(2) * (1.0 + slack),
        (inf_w - inf_gamma).abs() <= 1e-9 * inf_w.max(1e-300) + env.contact_tol,
        inf_gamma.powi(2) <= ABP_CONSTANT * envelope_image * (1.0 + slack),
        envelope_image <= v_image * (1.0 + 1e-6),
        v_image <= big_lambda * contact_area * (1.0 + 1e-6),
    ];
    let chain_holds = (0.5 * c1).powi(2) <= ABP_CONSTANT * big_lambda * contact_area;
    // Envelope domination on stencils lying entirely in the contact set.
    let stencil = HessianStencil::new(vg.lattice());
    let mut gamma_full = env.gamma.clone();
    gamma_full.resize(vg.len(), 0.0);
    let (mut psd_checked, mut psd_violations) = (0, 0);
    for &i in &contact {
        let [ci, cj] = vg.ij(i);
        let full = (-2..=2).all(|di| (-2..=2).all(|dj| vg.node_at(ci + di, cj + dj).is_some_and(|k| env.contact[k])));
        if !full {
            continue;
        }
        let (Some(hg), Some(hv)) = (stencil.fit(vg, &gamma_full, i), v.hessian(i)) else { continue };
        psd_checked += 1;
        let tol = PSD_TOL * sym2::norm(hv.raw).max(1e-300);
        let gap = [hv.raw[0] - hg[0], hv.raw[1] - hg[1], hv.raw[2] - hg[2]];
        if sym2::eigenvalues(hg)[0] < -tol || sym2::eigenvalues(gap)[0] < -tol {
            psd_violations += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotation_deviation = (0..10)
        .map(|_| {
            let rt = rotation(rng.gen_range(0.0..2.0 * PI)).compose(&nv.map);
            (rt.norm() * rt.norm_adjoint() / rt.det() - shape).abs() / shape
        })
        .fold(0.0, f64::max);
    Ok(ContactOutcome {
        sample: ContactSample {
            center: x,
            height: t,
            contact_nodes: contact.len(),
            fractions,
            floor,
            inf_w,
            inf_gamma,
            envelope_image,
            v_image,
            contact_area,
            chain_holds,
            links,
            psd_checked,
            psd_violations,
            rotation_deviation,
        },
        min_eig,
    })
}

/// Contact-set fractions, Hessian floors and the measure chain at every
/// sample, with the paraboloid `p(z) = c₁(|z|²/n² − 1)/2`.
pub fn verify_hesssupermean(
    u: &PLConvexFunction,
    samples: &[(usize, f64)],
    c1: f64,
    big_lambda: f64,
    eps: &[f64],
) -> Result<SupermeanReport, EstimateError> {
    if !(c1 > 0.0) || eps.first() != Some(&0.0) {
        return Err(EstimateError::InvalidInput("need c₁ > 0 and an ε grid starting at 0".into()));
    }
    let results: Vec<_> = samples
        .par_iter()
        .enumerate()
        .map(|(k, &(x, t))| one(u, x, t, c1, big_lambda, eps, k as u64))
        .collect();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    let mut min_eig = f64::INFINITY;
    for (r, &(x, t)) in results.into_iter().zip(samples) {
        match r {
            Ok(o) => {
                min_eig = min_eig.min(o.min_eig);
                out.push(o.sample);
            }
            Err(e @ (EstimateError::DegenerateSection { .. } | EstimateError::Geometry(_))) => skipped.push((x, t, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(EstimateError::InvalidInput("no usable section sample".into()));
    }
    let f0: Vec<f64> = out.iter().map(|s| s.fractions[0]).collect();
    let c_prime = percentile(&f0, 0.05);
    let c2 = 0.5 * c_prime;
    let mut eps1 = 0.0;
    for (k, &e) in eps.iter().enumerate() {
        let ok = out.iter().filter(|s| s.fractions[k] >= c2).count();
        if ok as f64 >= 0.95 * out.len() as f64 {
            eps1 = e;
        } else {
            break;
        }
    }
    let floors: Vec<f64> = out.iter().map(|s| s.floor).collect();
    Ok(SupermeanReport {
        eps: eps.to_vec(),
        c_prime,
        c2,
        eps1,
        c3: percentile(&floors, 0.05),
        min_contact_eig: min_eig,
        chain_holds: out.iter().filter(|s| s.chain_holds).count(),
        psd_checked: out.iter().map(|s| s.psd_checked).sum(),
        psd_violations: out.iter().map(|s| s.psd_violations).sum(),
        rotation_deviation: out.iter().map(|s| s.rotation_deviation).fold(0.0, f64::max),
        samples: out,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexBody, Grid};
    use std::sync::Arc;

    #[test]
    fn quadratic_contact_disc() {
        let body = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 256);
        let g = Arc::new(Grid::on_domain(&body, 1.0 / 64.0).unwrap());
        let u = PLConvexFunction::from_fn(g.clone(), |p| 0.5 * (p[0] * p[0] + p[1] * p[1] - 1.0)).unwrap();
        let samples: Vec<(usize, f64)> = [(0, 0), (5, 5), (-7, 2)].iter().map(|&(i, j)| (g.node_at(i, j).unwrap(), 0.02)).collect();
        let c1 = 0.5;
        // Z is the unit disc and w = a|z|² − b. A tangent plane at radius r
        // stays below 0 on the unit circle iff a(2r − r²) <= b.
        let (a, b): (f64, f64) = (0.5 - c1 / 8.0, 0.5 - c1 / 2.0);
        let r_star = 1.0 - (1.0 - b / a).sqrt();
        // Dual cells of the rim nodes reach half a mapped cell further.
        let half = 0.5 / 64.0 / (2.0f64 * 0.02).sqrt();
        let want = (r_star + half).powi(2);
        let r = verify_hesssupermean(&u, &samples, c1, 1.0, &EPS_GRID).unwrap();
        for s in &r.samples {
            // E lies well inside every shrunken section.
            for f in &s.fractions {
                assert!((f - want).abs() < 0.03, "{f} vs {want}");
            }
            assert!((s.floor - 1.0).abs() < 0.05);
            assert!(s.links.iter().all(|&l| l), "{:?}", s.links);
            assert!(s.chain_holds);
            assert!(s.rotation_deviation < 1e-12);
        }
        assert_eq!(r.eps1, 0.5);
        assert!(r.psd_checked > 0 && r.psd_violations == 0);
        // D²v = Id against c₁/n².
        assert!((r.min_contact_eig - 8.0).abs() < 0.1);
    }

    #[test]
    fn empty_contact_is_an_error() {
        let body = ConvexBody::circumscribed_disc([0.0, 0.0], 1.0, 256);
        let g = Arc::new(Grid::on_domain(&body, 1.0 / 32.0).unwrap());
        let u = PLConvexFunction::from_fn(g.clone(), |p| 0.5 * (p[0] * p[0] + p[1] * p[1] - 1.0)).unwrap();
        let x = g.node_at(0, 0).unwrap();
        // c₁ = n² makes w ≡ 3/2 while Γ_w ≡ 0.
        let r = verify_hesssupermean(&u, &[(x, 0.05)], 4.0, 1.0, &EPS_GRID);
        assert!(matches!(r, Err(EstimateError::EmptyContactSet { .. })), "{r:?}");
    }

    #[test]
    fn percentile_picks_lower_tail() {
        let v: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert_eq!(percentile(&v, 0.05), 4.0);
        assert_eq!(percentile(&v, 0.0), 0.0);
    }
}
