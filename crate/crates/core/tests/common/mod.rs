//! Random instances and reference algorithms for the integration tests.
//! Nothing here calls the routine it is used to check.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sdfir::numerics::{self, CMatrix, Complex, Matrix};
use sdfir::{Domain, StateSpace};

pub const DISCRETE: Domain = Domain::Discrete { period: 1.0 };

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Discrete system with spectral radius drawn from `[0.2, 0.9]`.
pub fn random_discrete(rng: &mut StdRng, n: usize, outputs: usize, inputs: usize) -> StateSpace {
    let mut a = random_matrix(rng, n, n);
    if n > 0 {
        let rho = numerics::spectral_radius(&a).unwrap().max(1e-3);
        a *= rng.gen_range(0.2..0.9) / rho;
    }
    StateSpace::new(
        a,
        random_matrix(rng, n, inputs),
        random_matrix(rng, outputs, n),
        random_matrix(rng, outputs, inputs),
        DISCRETE,
    )
    .unwrap()
}

/// Continuous system with spectral abscissa in `[-2, -0.2]`.
pub fn random_continuous(rng: &mut StdRng, n: usize, strictly_proper: bool) -> StateSpace {
    let mut a = random_matrix(rng, n, n);
    let shift = numerics::spectral_abscissa(&a).unwrap() + rng.gen_range(0.2..2.0);
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let d = if strictly_proper {
        Matrix::zeros(1, 1)
    } else {
        random_matrix(rng, 1, 1)
    };
    StateSpace::new(a, random_matrix(rng, n, 1), random_matrix(rng, 1, n), d, Domain::Continuous).unwrap()
}

pub fn first_order(pole: f64, gain: f64) -> StateSpace {
    StateSpace::from_polynomials(&[gain], &[1.0, pole], Domain::Continuous).unwrap()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).amax()
}

pub fn cmax_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn unit_circle(theta: f64) -> Complex<f64> {
    Complex::from_polar(1.0, theta)
}

/// `sum_{k <= terms} A^k / k!`.
pub fn taylor_expm(a: &Matrix, terms: usize) -> Matrix {
    let n = a.nrows();
    let mut term = Matrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=terms {
        term = &term * a / k as f64;
        sum += &term;
    }
    sum
}

/// Composite Simpson rule for a matrix-valued integrand on `[0, t]`.
pub fn simpson(f: impl Fn(f64) -> Matrix, t: f64, intervals: usize) -> Matrix {
    assert!(intervals % 2 == 0);
    let step = t / intervals as f64;
    let mut sum = f(0.0) + f(t);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += f(i as f64 * step) * w;
    }
    sum * (step / 3.0)
}

/// Faddeev-LeVerrier: `det(sI - A) = sum c_k s^{n-k}` and the matrices `N_k`
/// with `adj(sI - A) = sum N_k s^{n-1-k}`.
pub fn faddeev_leverrier(a: &Matrix) -> (Vec<f64>, Vec<Matrix>) {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut adj = Vec::with_capacity(n);
    let mut m = Matrix::identity(n, n);
    for k in 1..=n {
        adj.push(m.clone());
        let am = a * &m;
        let c = -am.trace() / k as f64;
        coeffs.push(c);
        m = am + Matrix::identity(n, n) * c;
    }
    (coeffs, adj)
}

/// Horner evaluation, descending powers.
pub fn poly_eval(p: &[f64], z: Complex<f64>) -> Complex<f64> {
    p.iter().fold(Complex::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// SISO response from the characteristic polynomial and the adjugate.
pub fn polynomial_response(g: &StateSpace, z: Complex<f64>) -> Complex<f64> {
    let (den, adj) = faddeev_leverrier(g.a());
    let n = g.order();
    let mut num = Complex::new(0.0, 0.0);
    for (k, nk) in adj.iter().enumerate() {
        let cnb = (g.c() * nk * g.b())[(0, 0)];
        num += z.powi((n - 1 - k) as i32) * cnb;
    }
    num / poly_eval(&den, z) + g.d()[(0, 0)]
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
pub fn durand_kerner(monic: &[f64]) -> Vec<Complex<f64>> {
    let n = monic.len() - 1;
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..n).map(|k| seed.powi(k as i32)).collect();
    for _ in 0..5000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let zi = roots[i];
            let mut denom = Complex::new(1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    denom *= zi - zj;
                }
            }
            let step = poly_eval(monic, zi) / denom;
            roots[i] = zi - step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// Nelder-Mead simplex minimization; returns `(x, f(x))`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, iters: usize, ftol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let towards = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
    };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 < ftol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|s| s.0[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let xr = towards(&centroid, &worst.0, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = towards(&centroid, &worst.0, -2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = towards(&centroid, &worst.0, 0.5);
            let fc = f(&xc);
            if fc < worst.1 {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = towards(&best, &s.0, 0.5);
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Peak of `sigma_max(G(e^{j theta}))` over a uniform grid, by power
/// iteration on `G^H G` rather than an SVD.
pub fn grid_peak(g: &StateSpace, points: usize) -> f64 {
    (0..points)
        .map(|i| {
            let theta = std::f64::consts::PI * i as f64 / (points - 1) as f64;
            let r = g.freq_response(unit_circle(theta)).unwrap();
            let gram = r.adjoint() * &r;
            let mut v = CMatrix::from_element(gram.ncols(), 1, Complex::new(1.0, 0.0));
            let mut lambda = 0.0;
            for _ in 0..200 {
                let w = &gram * &v;
                let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return 0.0;
                }
                lambda = norm / v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                v = w / Complex::new(norm, 0.0);
            }
            lambda.sqrt()
        })
        .fold(0.0, f64::max)
}

/// Property-test settings; regressions are not persisted from integration
/// test binaries.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}
