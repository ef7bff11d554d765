//! The verification pipeline on the exact quadratic `(|x|² − 1)/2`.

use std::sync::OnceLock;

use ma_lab_core::estimates::{run_instance, InstanceOutput, PipelineOptions, ROW_IDS};
use ma_lab_core::solver::analytic_catalog;

fn output() -> &'static InstanceOutput {
    static OUT: OnceLock<InstanceOutput> = OnceLock::new();
    OUT.get_or_init(|| {
        let entry = analytic_catalog("quadratic_disc", 2.0 / 48.0).unwrap();
        run_instance("quad48", &entry.solution, &PipelineOptions::default()).unwrap()
    })
}

#[test]
fn every_row_is_reported() {
    let rep = &output().report;
    for id in ROW_IDS {
        assert!(rep.find(id).is_some(), "missing row {id}");
    }
    assert_eq!(rep.rows.len(), ROW_IDS.len());
}

#[test]
fn hessian_average_ratio_is_one() {
    let h = output().hessmean.as_ref().unwrap();
    assert!((h.c1 - 1.0).abs() <= 0.05, "{}", h.c1);
    // Every section is a disc, normalized to the unit disc, where
    // v = (|z|² − 1)/2 up to the discretization.
    let [lo, hi] = h.alex_band;
    assert!((lo - 0.5).abs() < 0.05 && (hi - 0.5).abs() < 0.05, "{lo} {hi}");
}

#[test]
fn constant_hessian_integrals() {
    // ‖D²u‖ ≡ 1, so I_{k+1}(U/2)/I_k(3U/4) = log 3 · |U/2|/|3U/4| = log 3 · 4/9.
    let m = output().main.as_ref().unwrap();
    let want = 3f64.ln() * 4.0 / 9.0;
    for r in &m.results {
        assert!((r.ratio / want - 1.0).abs() < 0.05, "k={} {} {want}", r.k, r.ratio);
        assert!(r.layer_cake.deviation <= 0.01);
    }
}

#[test]
fn beta_is_square_root() {
    let a = &output().atlas;
    for (t, b) in a.taus.iter().zip(&a.beta) {
        assert!((b / t.sqrt() - 1.0).abs() <= 0.05, "tau {t}: {b}");
    }
    assert!(a.theta <= 9.0 * 1.05);
}

#[test]
fn reg_bounds_hold() {
    let r = output().reg.as_ref().unwrap();
    assert!(r.norm_bound && r.det_bound && r.n() > 0);
    for j in 0..r.ks.len() {
        assert!(r.pulled_back[j] >= r.lhs[j]);
        assert!(r.assembled[j].is_finite());
    }
}
