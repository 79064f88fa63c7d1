mod common;

use common::*;
use rand::Rng;
use sdfir::hinf::{hinf_norm, kyp_norm_bisect};
use sdfir::numerics::Matrix;
use sdfir::synth::{self, certificate_is_positive};
use sdfir::{design_fir, design_multi_delay, verify_bound, DesignSpec, Domain, Error, SolveStatus, SolverOptions, StateSpace};

/// `K_c = 1/(s+1)`, `F = 1/(s+2)`, `h = 1`, `N = 2`.
fn tiny(taps: usize, delay: usize) -> DesignSpec {
    DesignSpec {
        target: first_order(1.0, 1.0),
        characteristic: first_order(2.0, 1.0),
        h: 1.0,
        delay,
        upsampling: 1,
        taps,
        factor: 2,
        solver: SolverOptions::default(),
    }
}

fn verified(spec: &DesignSpec, a: &[f64]) -> f64 {
    let sys = spec.error_system().unwrap();
    hinf_norm(&sys.realize(a).unwrap(), 1e-10).unwrap().value
}

#[test]
fn tiny_design_matches_derivative_free_search() {
    let spec = tiny(2, 1);
    let r = design_fir(&spec).unwrap();
    let f = |a: &[f64]| verified(&spec, a);
    // coarse grid, then simplex restarts from the best point
    let mut best = (vec![0.0, 0.0], f(&[0.0, 0.0]));
    for i in -20..=20 {
        for j in -20..=20 {
            let a = [i as f64 * 0.1, j as f64 * 0.1];
            let v = f(&a);
            if v < best.1 {
                best = (a.to_vec(), v);
            }
        }
    }
    for step in [0.1, 0.02, 0.005, 1e-3] {
        best = nelder_mead(f, &best.0, step, 2000, 1e-13);
    }
    assert!((r.gamma - best.1).abs() <= 1e-3, "{} vs {}", r.gamma, best.1);
    for (x, y) in r.filter.coeffs().iter().zip(&best.0) {
        assert!((x - y).abs() <= 1e-3, "{:?} vs {:?}", r.filter.coeffs(), best.0);
    }
}

#[test]
fn certificate_and_bound_are_consistent() {
    for (taps, delay) in [(1, 0), (2, 1), (3, 1), (4, 2)] {
        let spec = tiny(taps, delay);
        let r = design_fir(&spec).unwrap();
        assert_eq!(r.diagnostics.status, SolveStatus::Optimal);
        assert!(certificate_is_positive(&r.lyapunov_x).unwrap());
        assert!(r.verified_norm <= r.gamma * (1.0 + 1e-3), "{} vs {}", r.verified_norm, r.gamma);
        assert!(
            r.verified_norm >= r.gamma * (1.0 - 5.0 * spec.solver.gap_tol),
            "M={taps} m={delay}: verified {} below gamma {} by {:e}",
            r.verified_norm,
            r.gamma,
            1.0 - r.verified_norm / r.gamma
        );
        let trace = &r.diagnostics.objective_trace;
        assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{trace:?}");
    }
}

#[test]
fn kyp_bisection_confirms_designed_norm() {
    let spec = tiny(3, 1);
    let r = design_fir(&spec).unwrap();
    let e = spec.error_system().unwrap().realize(r.filter.coeffs()).unwrap();
    let grid = hinf_norm(&e, 1e-9).unwrap().value;
    let kyp = kyp_norm_bisect(&e, 1e-6).unwrap().value;
    assert!((kyp - grid).abs() <= 1e-4 * grid, "{kyp} vs {grid}");
}

#[test]
fn longer_filters_never_do_worse() {
    for taps in 1..=3 {
        let short = design_fir(&tiny(taps, 1)).unwrap().gamma;
        let long = design_fir(&tiny(taps + 4, 1)).unwrap().gamma;
        assert!(long <= short + 1e-6, "M={taps}: {long} > {short}");
    }
}

#[test]
fn unit_ratio_multi_rate_reproduces_single_rate() {
    let spec = tiny(3, 1);
    let single = design_fir(&spec).unwrap();
    let sys = spec.multi_rate_error_system().unwrap();
    let multi = synth::design_for_system(&sys, spec.tap_period(), &spec.solver).unwrap();
    assert!((single.gamma - multi.gamma).abs() <= 1e-6 * single.gamma);
    for (a, b) in single.filter.coeffs().iter().zip(multi.filter.coeffs()) {
        assert!((a - b).abs() <= 1e-5);
    }
}

#[test]
fn delay_helps() {
    // the filter must be long enough to reach past the delayed target
    let none = design_fir(&tiny(4, 0)).unwrap().gamma;
    let two = design_fir(&tiny(4, 2)).unwrap().gamma;
    assert!(two <= none + 1e-6, "{two} > {none}");
}

#[test]
fn zero_target_designs_zero_filter() {
    let mut spec = tiny(4, 1);
    spec.target = StateSpace::gain(Matrix::zeros(1, 1), Domain::Continuous).unwrap();
    spec.characteristic = first_order(1.0, 1.0);
    spec.upsampling = 2;
    let r = design_fir(&spec).unwrap();
    assert!(r.filter.coeffs().iter().map(|a| a * a).sum::<f64>().sqrt() <= 1e-6);
    assert!(r.gamma <= 1e-6);
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = tiny(2, 1);
    spec.target = first_order(-0.5, 1.0);
    assert!(matches!(design_fir(&spec), Err(Error::Validation { .. })));
    let mut spec = tiny(2, 1);
    spec.upsampling = 3;
    assert!(matches!(design_fir(&spec), Err(Error::Parameter(_))));
}

fn multi_rate_base() -> DesignSpec {
    DesignSpec {
        upsampling: 2,
        factor: 2,
        taps: 4,
        ..tiny(4, 0)
    }
}

#[test]
fn single_term_is_plain_design() {
    let base = multi_rate_base();
    let g = first_order(1.0, 1.0);
    let (k, gammas, bound) = design_multi_delay(&[(1, g.clone())], &base).unwrap();
    let direct = design_fir(&DesignSpec { target: g.clone(), delay: 1, ..base.clone() }).unwrap();
    assert_eq!(k.coeffs(), direct.filter.coeffs());
    assert_eq!(gammas, vec![direct.gamma]);
    assert_eq!(bound, direct.gamma);
    let (lhs, rhs) = verify_bound(&[(1, g)], &k, &base, &gammas, 1e-6).unwrap();
    assert!((lhs - direct.verified_norm).abs() <= 1e-6 * rhs);
}

#[test]
fn repeated_term_doubles_filter_and_bound() {
    let base = multi_rate_base();
    let g = first_order(1.0, 1.0);
    let (k1, g1, _) = design_multi_delay(&[(1, g.clone())], &base).unwrap();
    let (k2, g2, bound) = design_multi_delay(&[(1, g.clone()), (1, g)], &base).unwrap();
    for (a, b) in k1.coeffs().iter().zip(k2.coeffs()) {
        assert_eq!(2.0 * a, *b);
    }
    assert_eq!(g2, vec![g1[0], g1[0]]);
    assert_eq!(bound, 2.0 * g1[0]);
}

#[test]
fn smith_predictor_bound_holds() {
    let base = multi_rate_base();
    let g = first_order(1.0, 1.0);
    let terms = vec![(0, g.clone()), (2, g.scale(-1.0))];
    let (k, gammas, bound) = design_multi_delay(&terms, &base).unwrap();
    let (lhs, rhs) = verify_bound(&terms, &k, &base, &gammas, 1e-6).unwrap();
    assert_eq!(rhs, bound);
    assert!(lhs <= rhs + 1e-6, "{lhs} > {rhs}");
}

#[test]
fn zero_second_term_reduces_to_first() {
    let base = multi_rate_base();
    let g = first_order(1.0, 1.0);
    let zero = StateSpace::gain(Matrix::zeros(1, 1), Domain::Continuous).unwrap();
    let (k, gammas, _) = design_multi_delay(&[(1, g.clone())], &base).unwrap();
    let (single, _) = verify_bound(&[(1, g.clone())], &k, &base, &gammas, 1e-6).unwrap();
    let (with_zero, _) = verify_bound(&[(1, g), (3, zero)], &k, &base, &gammas, 1e-6).unwrap();
    assert!((single - with_zero).abs() <= 1e-9 * single);
}

#[test]
fn random_two_term_bounds_hold() {
    let mut r = rng(70);
    let base = DesignSpec { taps: 3, ..multi_rate_base() };
    for _ in 0..20 {
        let terms: Vec<(usize, StateSpace)> = (0..2)
            .map(|_| {
                let (delay, order) = (r.gen_range(0..3), r.gen_range(1..=2));
                (delay, random_continuous(&mut r, order, false))
            })
            .collect();
        let (k, gammas, _) = design_multi_delay(&terms, &base).unwrap();
        let (lhs, rhs) = verify_bound(&terms, &k, &base, &gammas, 1e-6).unwrap();
        assert!(lhs <= rhs + 1e-6);
    }
}

#[test]
fn failing_term_is_named() {
    let base = multi_rate_base();
    let terms = vec![(0, first_order(1.0, 1.0)), (1, first_order(-1.0, 1.0))];
    match design_multi_delay(&terms, &base) {
        Err(Error::Term { index, .. }) => assert_eq!(index, 1),
        other => panic!("{other:?}"),
    }
}
