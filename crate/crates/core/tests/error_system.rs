mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sdfir::error_system::{build_multi_delay, build_multi_rate, build_single_rate};
use sdfir::hinf::hinf_norm;
use sdfir::lifting::{lift, lift_fir_polyphase, make_hold_vector, make_multirate_hold, make_sample_row};
use sdfir::numerics::{self, CMatrix, Complex, Matrix};
use sdfir::{Domain, FirFilter, StateSpace};

fn complex(m: &Matrix) -> CMatrix {
    m.map(|v| Complex::new(v, 0.0))
}

/// Lifted fast discretization of `g`, evaluated at the slow point `z`.
fn lifted_response(g: &StateSpace, h: f64, n: usize, z: Complex<f64>) -> CMatrix {
    let fast = g.zoh_discretize(h / n as f64).unwrap();
    lift(&fast, n).unwrap().inner().freq_response(z).unwrap()
}

/// `sum_i z^{-m_i} K_{i,N} F_N - H K~(z) S_N F_N` from separately evaluated
/// pieces.
fn reference_response(
    terms: &[(usize, StateSpace)],
    f: &StateSpace,
    h: f64,
    n: usize,
    l: usize,
    a: &[f64],
    z: Complex<f64>,
) -> CMatrix {
    let f_n = lifted_response(f, h, n, z);
    let mut t1 = CMatrix::zeros(n, n);
    for (m, g) in terms {
        t1 += lifted_response(g, h, n, z) * &f_n * z.powi(-(*m as i32));
    }
    let k = FirFilter::new(a.to_vec(), h / l as f64).unwrap();
    let k_lift = lift_fir_polyphase(&k, l).unwrap().freq_response(z).unwrap();
    let hold = complex(&make_multirate_hold(n, l).unwrap());
    let t2 = complex(&make_sample_row(n)) * f_n;
    t1 - hold * k_lift * t2
}

fn slow_points() -> Vec<Complex<f64>> {
    (0..32).map(|i| unit_circle(0.03 + i as f64 * 0.097)).collect()
}

fn random_coeffs(r: &mut rand::rngs::StdRng, m: usize) -> Vec<f64> {
    (0..m).map(|_| r.gen_range(-1.0..1.0)).collect()
}

#[test]
fn single_rate_matches_interconnection() {
    let mut r = rng(40);
    let f = first_order(1.0, 1.0);
    for _ in 0..3 {
        let kc = random_continuous(&mut r, 2, false);
        let sys = build_single_rate(&kc, &f, 1.0, 1, 2, 2).unwrap();
        let a = random_coeffs(&mut r, 2);
        let e = sys.realize(&a).unwrap();
        for z in slow_points() {
            let expected = reference_response(&[(1, kc.clone())], &f, 1.0, 2, 1, &a, z);
            assert!(cmax_abs_diff(&e.freq_response(z).unwrap(), &expected) <= 1e-9);
        }
        // the hold vector is the unit-ratio multi-rate hold
        assert_eq!(make_multirate_hold(2, 1).unwrap(), make_hold_vector(2));
    }
}

#[test]
fn multi_rate_matches_interconnection() {
    let mut r = rng(41);
    let f = first_order(1.0, 1.0);
    for _ in 0..3 {
        let kc = random_continuous(&mut r, 2, false);
        let sys = build_multi_rate(&kc, &f, 1.0, 2, 5, 2, 4).unwrap();
        let a = random_coeffs(&mut r, 5);
        let e = sys.realize(&a).unwrap();
        for z in slow_points() {
            let expected = reference_response(&[(2, kc.clone())], &f, 1.0, 4, 2, &a, z);
            assert!(cmax_abs_diff(&e.freq_response(z).unwrap(), &expected) <= 1e-9);
        }
    }
}

#[test]
fn multi_delay_matches_interconnection() {
    let mut r = rng(42);
    let f = first_order(2.0, 1.0);
    let terms = vec![
        (0, random_continuous(&mut r, 2, false)),
        (3, random_continuous(&mut r, 1, true)),
    ];
    let sys = build_multi_delay(&terms, &f, 0.5, 4, 2, 4).unwrap();
    let a = random_coeffs(&mut r, 4);
    let e = sys.realize(&a).unwrap();
    for z in slow_points() {
        let expected = reference_response(&terms, &f, 0.5, 4, 2, &a, z);
        assert!(cmax_abs_diff(&e.freq_response(z).unwrap(), &expected) <= 1e-9);
    }
}

#[test]
fn unit_ratio_multi_rate_equals_single_rate() {
    let mut r = rng(43);
    let kc = random_continuous(&mut r, 3, false);
    let f = first_order(1.0, 1.0);
    let s = build_single_rate(&kc, &f, 1.0, 2, 4, 3).unwrap();
    let m = build_multi_rate(&kc, &f, 1.0, 2, 4, 1, 3).unwrap();
    assert_eq!(s.a(), m.a());
    assert_eq!(s.b(), m.b());
    assert_eq!(s.c0(), m.c0());
    assert_eq!(s.d0(), m.d0());
    assert_eq!(s.c_lin(), m.c_lin());
    assert_eq!(s.d_lin(), m.d_lin());
}

#[test]
fn zero_target_with_zero_filter_vanishes() {
    let zero = StateSpace::gain(Matrix::zeros(1, 1), Domain::Continuous).unwrap();
    let f = first_order(1.0, 1.0);
    let sys = build_multi_rate(&zero, &f, 1.0, 2, 3, 1, 2).unwrap();
    let e = sys.realize(&[0.0; 3]).unwrap();
    assert_eq!(hinf_norm(&e, 1e-9).unwrap().value, 0.0);
}

#[test]
fn design_example_layout() {
    let num: Vec<f64> = sdfir::poly::product(&[vec![1.0, 0.0, 1.33], vec![1.0, 0.0, 1.899], vec![1.0, 0.0, 10.31]])
        .iter()
        .map(|v| v * 0.0031623)
        .collect();
    let den = sdfir::poly::product(&[
        vec![1.0, 0.3705, 0.1681],
        vec![1.0, 0.1596, 0.7062],
        vec![1.0, 0.03557, 0.9805],
    ]);
    let kc = StateSpace::from_polynomials(&num, &den, Domain::Continuous).unwrap();
    let f = first_order(1.0, 1.0);
    for l in [1, 2] {
        let sys = build_multi_rate(&kc, &f, 1.0, 5, 32, l, 6).unwrap();
        let lay = sys.layout();
        assert_eq!((lay.target_states, lay.characteristic_states, lay.filter_states), (6 + 5 * 6 + 1, 1, 31));
        assert_eq!(sys.order(), 69);
        assert_eq!((sys.outputs(), sys.inputs()), (6, 6));
        assert_eq!(sys.c_lin().len(), 32);
        assert!(numerics::spectral_radius(sys.a()).unwrap() < 1.0);
    }
    let hold = make_multirate_hold(6, 2).unwrap();
    assert_eq!(hold.shape(), (6, 2));
    assert_eq!(hold.column(0).sum(), 3.0);
}

#[test]
fn delay_as_slow_steps_equals_fast_delays() {
    // z^{-m} on the lifted signal is m*N delays of the fast system
    let mut r = rng(44);
    let kc = random_continuous(&mut r, 2, false);
    let (h, n, m) = (1.0, 3, 2);
    let fast = kc.zoh_discretize(h / n as f64).unwrap();
    let slow_delay = lift(&fast, n).unwrap().into_inner().delay_augment(m).unwrap();
    let fast_delay = lift(&fast.delay_augment(m * n).unwrap(), n).unwrap().into_inner();
    for z in slow_points() {
        assert!(cmax_abs_diff(&slow_delay.freq_response(z).unwrap(), &fast_delay.freq_response(z).unwrap()) <= 1e-10);
    }
}

#[test]
fn norm_settles_as_lifting_refines() {
    let kc = first_order(1.0, 1.0);
    let f = first_order(2.0, 1.0);
    let a = [0.2, 0.4, 0.1];
    let norms: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&n| {
            let sys = build_single_rate(&kc, &f, 1.0, 1, 3, n).unwrap();
            hinf_norm(&sys.realize(&a).unwrap(), 1e-9).unwrap().value
        })
        .collect();
    let change = (norms[2] - norms[1]).abs() / norms[2];
    assert!(change < 0.2, "{norms:?}");
}

#[test]
fn rejects_invalid_inputs_by_name() {
    let f = first_order(1.0, 1.0);
    let unstable = first_order(-1.0, 1.0);
    let err = build_single_rate(&unstable, &f, 1.0, 1, 2, 2).unwrap_err().to_string();
    assert!(err.contains("`target`"), "{err}");
    let proper = StateSpace::from_polynomials(&[1.0, 0.0], &[1.0, 1.0], Domain::Continuous).unwrap();
    let err = build_single_rate(&f, &proper, 1.0, 1, 2, 2).unwrap_err().to_string();
    assert!(err.contains("`characteristic`"), "{err}");
    assert!(build_multi_rate(&f, &f, 1.0, 1, 2, 2, 3).is_err());
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn output_map_is_affine(seed in 0u64..10_000, t in -2.0f64..2.0) {
        let mut r = rng(seed);
        let kc = random_continuous(&mut r, 2, false);
        let sys = build_multi_rate(&kc, &first_order(1.0, 1.0), 1.0, 1, 4, 2, 2).unwrap();
        let a = random_coeffs(&mut r, 4);
        let b = random_coeffs(&mut r, 4);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let lhs = sys.c_at(&mix).unwrap();
        let rhs = sys.c_at(&a).unwrap() * t + sys.c_at(&b).unwrap() * (1.0 - t);
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-14);
        prop_assert_eq!(sys.d_at(&a).unwrap(), sys.d_at(&b).unwrap());
    }

    #[test]
    fn error_system_is_stable(seed in 0u64..10_000, m in 0usize..3, taps in 1usize..6) {
        let mut r = rng(seed);
        let kc = random_continuous(&mut r, 3, false);
        let f = random_continuous(&mut r, 2, true);
        let sys = build_multi_rate(&kc, &f, 0.7, m, taps, 2, 4).unwrap();
        prop_assert!(numerics::spectral_radius(sys.a()).unwrap() < 1.0);
        prop_assert!(sys.d_lin().iter().all(|d| d.iter().all(|v| *v == 0.0)));
        if m >= 1 {
            prop_assert!(sys.d0().iter().all(|v| *v == 0.0));
        }
    }
}
