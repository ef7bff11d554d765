//! The verification pipeline of one solved instance.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{john_normalize, ConvexBody, PLConvexFunction};
use crate::sections::{build_atlas, maximal_field, sample_centers, AtlasOptions, CoverResult, SectionAtlas};
use crate::solver::MASolution;

use super::hessmean::{verify_hessmean, HessmeanReport};
use super::integrals::{verify_main_fields, MainReport, RegionField, Rung};
use super::levelsets::{replay_levelsets, verify_levelsets, ChainConstants, LevelsetReplay, LevelsetReport};
use super::reg::{verify_reg_reduction, RegReport};
use super::report::{EstimateReport, IntegralRecord};
use super::supermean::{verify_hesssupermean, SupermeanReport, ABP_CONSTANT, EPS_GRID};
use super::EstimateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Hessmean,
    Hesssupermean,
    Levelsets,
    Main,
    Reg,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Hessmean, Stage::Hesssupermean, Stage::Levelsets, Stage::Main, Stage::Reg];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Hessmean => "hessmean",
            Stage::Hesssupermean => "hesssupermean",
            Stage::Levelsets => "levelsets",
            Stage::Main => "main",
            Stage::Reg => "reg",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub atlas: AtlasOptions,
    /// Sample heights `ρ/2^j` for `j < heights`.
    pub heights: usize,
    pub ks: Vec<u32>,
    pub stages: Vec<Stage>,
    /// Level-set rungs rebuilt through the covering.
    pub replay_rungs: usize,
    /// Relative boundary tolerance of normalized solutions.
    pub boundary_tol: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            atlas: AtlasOptions::default(),
            heights: 2,
            ks: vec![0, 1, 2],
            stages: Stage::ALL.to_vec(),
            replay_rungs: 3,
            boundary_tol: 0.1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("instance {instance}, stage {stage}: {source}")]
pub struct StageError {
    pub instance: String,
    pub stage: &'static str,
    #[source]
    pub source: EstimateError,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceOutput {
    pub atlas: SectionAtlas,
    #[serde(skip)]
    pub cover: Option<CoverResult>,
    pub report: EstimateReport,
    pub hessmean: Option<HessmeanReport>,
    pub supermean: Option<SupermeanReport>,
    pub levelsets: Option<LevelsetReport>,
    pub replays: Vec<LevelsetReplay>,
    pub main: Option<MainReport>,
    pub reg: Option<RegReport>,
    /// Wall time per stage in seconds.
    pub timings: Vec<(String, f64)>,
}

/// `U/2` and `3U/4` as dilations of the domain about its John center.
pub fn working_regions(domain: &ConvexBody) -> Result<(ConvexBody, ConvexBody), EstimateError> {
    let t = john_normalize(domain)?;
    let c = t.apply_inverse2([0.0, 0.0]);
    Ok((domain.dilate(&c, 0.5), domain.dilate(&c, 0.75)))
}

fn worst(rungs: &[Rung]) -> (f64, f64) {
    rungs.iter().max_by(|a, b| a.ratio().total_cmp(&b.ratio())).map_or((0.0, 0.0), |r| (r.lhs, r.rhs))
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Runs the atlas and the requested verification stages on a solution.
pub fn run_instance(instance: &str, sol: &MASolution, opts: &PipelineOptions) -> Result<InstanceOutput, StageError> {
    let fail = |stage: &'static str| move |e: EstimateError| StageError { instance: instance.into(), stage, source: e };
    let u: &PLConvexFunction = &sol.u;
    let mut rep = EstimateReport::new(instance);
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, f64)>| {
        timings.push((name.to_string(), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };
    let want = |s: Stage| opts.stages.contains(&s);

    let tol = sol.problem.as_ref().map_or(1e-6, |p| p.tol);
    rep.row("alexandrov_measure", sol.residual, tol, sol.big_lambda / sol.lambda, sol.residual <= tol);

    let (inner, outer) = working_regions(u.domain()).map_err(fail("atlas"))?;
    let (mut atlas, cover) = build_atlas(u, &inner, &outer, &opts.atlas).map_err(|e| fail("atlas")(e.into()))?;
    lap("atlas", &mut timings);
    let rho = atlas.rho;
    rep.constant("rho", rho);
    rep.constant("theta", atlas.theta);
    rep.constant("K", atlas.k);
    rep.constant("eps0", atlas.eps0);
    for (t, b) in atlas.taus.iter().zip(&atlas.beta) {
        rep.constant(&format!("beta({t})"), *b);
    }
    rep.row("section_nested", atlas.monotone_checks as f64, atlas.monotone_checks as f64, 1.0, atlas.monotone_checks > 0);
    rep.row("section_height", atlas.samples as f64, atlas.samples as f64, rho, positive(rho) && atlas.samples > 0);
    let beta_max = atlas.beta.iter().copied().fold(0.0, f64::max);
    let beta_half = atlas.taus.iter().position(|&t| t == 0.5).map_or(beta_max, |i| atlas.beta[i]);
    rep.row("dilation_chain", beta_max, 1.0, beta_half, atlas.beta.iter().all(|&b| b > 0.0 && b < 1.0));
    rep.row("engulfing", atlas.theta, f64::INFINITY, atlas.theta, atlas.theta >= 1.0 && atlas.theta.is_finite() && atlas.pairs > 0);
    rep.row(
        "normalize_double_section",
        atlas.outer_ratio,
        1.0,
        atlas.inner_depth,
        atlas.outer_ratio <= 1.0 + 1e-6 && atlas.inner_depth >= 1.0 - 1e-6,
    );
    if let Some(p) = cover.profiles.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)) {
        let bound = atlas.k * p.eps.ln().abs();
        rep.row("covering_overlap", p.max_count as f64, bound, atlas.k, p.max_count as f64 <= bound * (1.0 + 1e-12));
    }
    rep.row("covering_stability", atlas.k_drift_all, 2.0, atlas.k_drift, atlas.k_drift_all <= 2.0);

    let centers = sample_centers(u, &inner, opts.atlas.centers);
    let samples: Vec<(usize, f64)> =
        centers.iter().flat_map(|&c| (0..opts.heights).map(move |j| (c, rho / f64::powi(2.0, j as i32)))).collect();

    let mut hm = None;
    if want(Stage::Hessmean) || want(Stage::Hesssupermean) || want(Stage::Levelsets) {
        let h = verify_hessmean(u, &samples).map_err(fail("hessmean"))?;
        let dv_lo = h.samples.iter().map(|s| s.det_volume).fold(f64::INFINITY, f64::min);
        let dv_hi = h.samples.iter().map(|s| s.det_volume).fold(0.0, f64::max);
        rep.row("john_det", dv_hi, 4.0, dv_lo, dv_lo >= 1.0 - 1e-6 && dv_hi <= 4.0 + 1e-6);
        let ni = h.samples.iter().map(|s| s.norm_identity).fold(0.0, f64::max);
        rep.row("norm_identity", ni, 1e-9, 1.0, ni <= 1e-9);
        let bz = h.samples.iter().map(|s| s.boundary_deviation).fold(0.0, f64::max);
        rep.row("boundary_zero", bz, opts.boundary_tol, h.samples.len() as f64, bz <= opts.boundary_tol);
        let [c1a, c2a] = h.alex_band;
        rep.constant("c1_alex", c1a);
        rep.constant("c2_alex", c2a);
        rep.row("alex_band", c2a, 20.0 * c1a, c2a / c1a, positive(c1a) && c2a <= 20.0 * c1a);
        rep.constant("C1", h.c1);
        rep.row("hessmean_average", h.c1, 0.0, h.c1, positive(h.c1) && h.samples.len() >= 100.min(samples.len()));
        rep.constant("c_dprime_gradient", h.gradient_bound);
        rep.row("hessmean_gradient", h.gradient_bound, 10.0, h.gradient_bound, h.gradient_bound <= 10.0);
        rep.row("transformation_law", h.law_max, 0.05, h.law_max, h.law_max <= 0.05);
        rep.row(
            "divergence_identity",
            h.divergence_max,
            0.02,
            h.divergence_checked as f64,
            h.divergence_checked > 0 && h.divergence_max <= 0.02,
        );
        hm = Some(h);
        lap("hessmean", &mut timings);
    }

    let mut sm = None;
    if let (true, Some(h)) = (want(Stage::Hesssupermean) || want(Stage::Levelsets), hm.as_ref()) {
        let c1 = h.alex_band[0];
        let s = verify_hesssupermean(u, &samples, c1, sol.big_lambda, &EPS_GRID).map_err(fail("hesssupermean"))?;
        atlas.set_eps1(s.eps1);
        rep.constant("c_prime_contact", s.c_prime);
        rep.constant("C2", s.c2);
        rep.constant("C3", s.c3);
        rep.constant("eps1", s.eps1);
        rep.constant("eps2", atlas.eps2);
        let n = s.samples.len() as f64;
        let k1 = s.eps.iter().rposition(|&e| e <= s.eps1).unwrap_or(0);
        let frac_ok = s.samples.iter().filter(|x| x.fractions[0] >= 0.05 && x.fractions[..=k1].iter().all(|&f| f >= s.c2)).count() as f64 / n;
        rep.row("contact_fraction", frac_ok, 0.95, s.c2, positive(s.c2) && frac_ok >= 0.95);
        let floor_ok = s.samples.iter().filter(|x| x.floor >= 0.01 && x.floor >= s.c3).count() as f64 / n;
        rep.row("hessian_floor", floor_ok, 0.95, s.c3, positive(s.c3) && floor_ok >= 0.95);
        let e_min = s.samples.iter().map(|x| x.contact_area).fold(f64::INFINITY, f64::min);
        rep.row("abp_chain", (0.5 * c1).powi(2), ABP_CONSTANT * sol.big_lambda * e_min, s.chain_holds as f64 / n, s.chain_holds == s.samples.len());
        rep.row("envelope_domination", s.psd_violations as f64, 0.0, s.psd_checked as f64, s.psd_checked > 0 && s.psd_violations == 0);
        rep.row("floor_rotation_invariance", s.rotation_deviation, 1e-9, 10.0, s.rotation_deviation <= 1e-9);
        sm = Some(s);
        lap("hesssupermean", &mut timings);
    }

    let needs_fields = want(Stage::Levelsets) || want(Stage::Main);
    let (fi, fo) = if needs_fields { (Some(RegionField::new(u, &inner)), Some(RegionField::new(u, &outer))) } else { (None, None) };

    let mut lv = None;
    let mut replays = Vec::new();
    if let (true, Some(fi), Some(fo)) = (want(Stage::Levelsets), fi.as_ref(), fo.as_ref()) {
        let field = maximal_field(u, &inner, rho).map_err(|e| fail("levelsets")(e.into()))?;
        let l = verify_levelsets(&field, fi, fo).map_err(fail("levelsets"))?;
        rep.constant("C4", l.c4);
        rep.constant("C5", l.c5);
        let (a, b) = worst(&l.rungs);
        rep.row("levelsets", a, b, l.c4, positive(l.c4) && positive(l.c5) && !l.rungs.is_empty());
        let m = &l.maximal;
        rep.constant("alpha0", m.threshold);
        rep.constant("C_prime_max", m.constant);
        rep.constant("C_dprime_max", m.level_factor);
        let (a, b) = worst(&m.rungs[m.rungs.iter().position(|r| r.level >= m.threshold).unwrap_or(m.rungs.len())..]);
        rep.row("maximal_inequality", a, b, m.constant, m.threshold.is_finite() && positive(m.constant));
        if let (Some(h), Some(s)) = (hm.as_ref(), sm.as_ref()) {
            let k = ChainConstants { c1: h.c1, c2: s.c2, c3: s.c3, eps2: atlas.eps2 };
            let n = l.rungs.len();
            let picks: Vec<usize> = if n <= opts.replay_rungs {
                (0..n).collect()
            } else {
                (0..opts.replay_rungs).map(|j| j * (n - 1) / (opts.replay_rungs - 1).max(1)).collect()
            };
            for j in picks {
                replays.push(replay_levelsets(u, &field, fi, fo, l.rungs[j].level, &k).map_err(fail("levelsets"))?);
            }
            let ok = replays.iter().all(|r| r.covers && r.holds);
            let c = replays.iter().map(|r| r.implied_c4).fold(0.0, f64::max);
            let (a, b) = replays
                .iter()
                .max_by(|x, y| (x.lhs / (x.implied_c4 * x.rhs)).total_cmp(&(y.lhs / (y.implied_c4 * y.rhs))))
                .map_or((0.0, 0.0), |r| (r.lhs, r.implied_c4 * r.rhs));
            rep.row("levelsets_covering", a, b, c, ok && !replays.is_empty());
        }
        lv = Some(l);
        lap("levelsets", &mut timings);
    }

    let mut mn = None;
    if let (true, Some(fi), Some(fo)) = (want(Stage::Main), fi.as_ref(), fo.as_ref()) {
        let m = verify_main_fields(fi, fo, &opts.ks).map_err(fail("main"))?;
        rep.constant("c_prime", m.key.constant);
        rep.constant("c_dprime", m.key.level_factor);
        rep.constant("c_bar", m.cbar);
        let key_rungs: Vec<Rung> = m.key.rungs.iter().copied().filter(|r| r.level >= m.cbar).collect();
        let (a, b) = worst(&key_rungs);
        rep.row("key_estimate", a, b, m.key.constant, m.key.threshold.is_finite() && m.key.constant.is_finite());
        for r in &m.results {
            let lc = &r.layer_cake;
            rep.row(&format!("layer_cake_k{}", r.k), lc.direct, lc.fubini, lc.deviation, lc.deviation <= 0.01 && lc.split_holds);
            rep.constant(&format!("C_main(k={})", r.k), r.ratio);
            rep.row(&format!("main_llogk_k{}", r.k), r.inner, r.outer, r.ratio, positive(r.ratio));
            rep.integrals.push(IntegralRecord { region: "U/2".into(), k: r.k + 1, value: r.inner });
            rep.integrals.push(IntegralRecord { region: "3U/4".into(), k: r.k, value: r.outer });
        }
        mn = Some(m);
        lap("main", &mut timings);
    }

    let mut rg = None;
    if want(Stage::Reg) {
        let r = verify_reg_reduction(u, &inner, u.domain(), &opts.ks).map_err(fail("reg"))?;
        rep.constant("r1", r.r1);
        rep.constant("r2", r.r2);
        rep.constant("N", r.n() as f64);
        rep.row("reg_shape", r.r1, r.r2, r.n() as f64, positive(r.r1) && r.r1 <= r.r2);
        let norm_ratio = r.pieces.iter().map(|p| p.norm * r.r1 / 2.0).fold(0.0, f64::max);
        let det_ratio = r.pieces.iter().map(|p| p.det * r.r2 * r.r2).fold(f64::INFINITY, f64::min);
        rep.row("reg_transform_bounds", norm_ratio, 1.0, det_ratio, r.norm_bound && r.det_bound);
        for (j, &k) in r.ks.iter().enumerate() {
            rep.constant(&format!("reg_assembled(k={k})"), r.assembled[j]);
            rep.row(
                &format!("reg_assembled_k{k}"),
                r.lhs[j],
                r.pulled_back[j],
                r.assembled[j],
                r.pulled_back[j] >= r.lhs[j] && positive(r.assembled[j]),
            );
            rep.integrals.push(IntegralRecord { region: "omega_prime".into(), k, value: r.lhs[j] });
        }
        rg = Some(r);
        lap("reg", &mut timings);
    }

    Ok(InstanceOutput {
        atlas,
        cover: Some(cover),
        report: rep,
        hessmean: hm,
        supermean: sm,
        levelsets: lv,
        replays,
        main: mn,
        reg: rg,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_of_the_disc() {
        let d = ConvexBody::circumscribed_disc([0.3, -0.2], 1.0, 64);
        let (a, b) = working_regions(&d).unwrap();
        assert!((a.volume() / d.volume() - 0.25).abs() < 1e-9);
        assert!((b.volume() / d.volume() - 0.5625).abs() < 1e-9);
        let c = a.centroid_of_vertices();
        assert!((c[0] - 0.3).abs() < 1e-6 && (c[1] + 0.2).abs() < 1e-6);
    }

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(Stage::parse(s.name()), Some(s));
        }
        assert_eq!(Stage::parse("solve"), None);
    }
}
