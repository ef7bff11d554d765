//! Discrete solutions against closed forms.

use ma_lab_core::solver::{analytic_catalog, solve, DensitySpec, DomainSpec, MAProblem, ProblemSpec};

fn sup_error(name: &str, h: f64) -> f64 {
    let entry = analytic_catalog(name, h).unwrap();
    let sol = solve(&entry.problem).unwrap();
    assert!(sol.residual <= entry.problem.spec.tol);
    let g = sol.u.grid();
    (0..g.len()).map(|i| (sol.u.value(i) - entry.exact(g.pos(i))).abs()).fold(0.0, f64::max)
}

#[test]
fn quadratic_disc_converges() {
    let coarse = sup_error("quadratic_disc", 2.0 / 24.0);
    let fine = sup_error("quadratic_disc", 2.0 / 48.0);
    assert!(fine <= 0.02, "{fine}");
    assert!(coarse / fine >= 1.5, "{coarse} {fine}");
}

#[test]
fn anisotropic_quadratic_is_close() {
    assert!(sup_error("anisotropic_quadratic(4)", 1.0 / 24.0) <= 0.03);
}

#[test]
fn rough_density_solution() {
    let spec = ProblemSpec { domain: DomainSpec::unit_disc(), f: DensitySpec::random(0.5, 2.0, 7), grid: 2.0 / 24.0, tol: 1e-6 };
    let p = MAProblem::new(spec).unwrap();
    let a = solve(&p).unwrap();
    let b = solve(&p).unwrap();
    assert!(a.residual <= 1e-6);
    let g = a.u.grid();
    for i in 0..g.len() {
        assert_eq!(a.u.value(i).to_bits(), b.u.value(i).to_bits());
        if g.is_boundary(i) {
            assert_eq!(a.u.value(i), 0.0);
        } else {
            assert!(a.u.value(i) < 0.0);
        }
    }
    assert!(a.u.nonconvex_nodes().is_empty());
}

#[test]
fn inverted_bounds_are_rejected() {
    let spec = ProblemSpec { domain: DomainSpec::unit_disc(), f: DensitySpec::random(2.0, 0.5, 0), grid: 0.1, tol: 1e-6 };
    assert!(MAProblem::new(spec).is_err());
}
