//! Discrete-time H-infinity norms.
//!
//! [`hinf_norm`] samples `sigma_max(G(e^{j theta}))` on a uniform grid over
//! `[0, pi]` and refines the three largest local peaks by golden-section
//! search. [`kyp_norm_bisect`] bisects on the bounded-real LMI instead and
//! shares no code with the grid path beyond the system itself.

use nalgebra::linalg::Hessenberg;
use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::kyp::{self, Gamma};
use crate::numerics::{self, CMatrix, Matrix};
use crate::sdp::{self, Feasibility, SolverOptions};
use crate::statespace::StateSpace;

pub const DEFAULT_GRID: usize = 2048;

/// Reachability Gramian eigenvalues below this fraction of the largest are
/// treated as unreachable by the LMI-based norm.
pub const REACHABILITY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    GridBisection,
    KypBisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormResult {
    pub value: f64,
    /// Radians per sample, in `[0, pi]`.
    pub peak_frequency: f64,
    pub method: NormMethod,
    pub tolerance_achieved: f64,
}

/// Evaluates `G(e^{j theta})` in `O(n^2)` per point after a one-time
/// Hessenberg reduction of `A`.
pub struct FrequencySampler {
    h: Vec<Complex<f64>>,
    n: usize,
    qb: Vec<Complex<f64>>,
    cq: CMatrix,
    d: CMatrix,
    inputs: usize,
}

impl FrequencySampler {
    pub fn new(g: &StateSpace) -> Self {
        let n = g.order();
        let (q, h) = if n == 0 {
            (Matrix::zeros(0, 0), Matrix::zeros(0, 0))
        } else {
            Hessenberg::new(g.a().clone()).unpack()
        };
        let qb = q.transpose() * g.b();
        let cq = g.c() * &q;
        let inputs = g.inputs();
        let mut hv = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                // entries below the subdiagonal are rounding noise
                hv.push(Complex::new(if i > j + 1 { 0.0 } else { -h[(i, j)] }, 0.0));
            }
        }
        let mut qbv = Vec::with_capacity(n * inputs);
        for i in 0..n {
            for j in 0..inputs {
                qbv.push(Complex::new(qb[(i, j)], 0.0));
            }
        }
        FrequencySampler {
            h: hv,
            n,
            qb: qbv,
            cq: cq.map(|v| Complex::new(v, 0.0)),
            d: g.d().map(|v| Complex::new(v, 0.0)),
            inputs,
        }
    }

    /// `G(e^{j theta})`.
    pub fn response(&self, theta: f64) -> Result<CMatrix> {
        let n = self.n;
        if n == 0 {
            return Ok(self.d.clone());
        }
        let z = Complex::from_polar(1.0, theta);
        let q = self.inputs;
        let mut m = self.h.clone();
        for i in 0..n {
            m[i * n + i] += z;
        }
        let mut x = self.qb.clone();
        // Gaussian elimination on the upper Hessenberg matrix, pivoting
        // between the current row and the one below it.
        let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        for k in 0..n {
            if k + 1 < n && m[(k + 1) * n + k].norm() > m[k * n + k].norm() {
                for j in k..n {
                    m.swap(k * n + j, (k + 1) * n + j);
                }
                for j in 0..q {
                    x.swap(k * q + j, (k + 1) * q + j);
                }
            }
            let pivot = m[k * n + k];
            if pivot.norm() <= 1e-14 * scale {
                return Err(Error::PoleEvaluation(format!("{z} is (numerically) a pole")));
            }
            if k + 1 < n {
                let f = m[(k + 1) * n + k] / pivot;
                if f != Complex::new(0.0, 0.0) {
                    for j in k..n {
                        let v = m[k * n + j];
                        m[(k + 1) * n + j] -= f * v;
                    }
                    for j in 0..q {
                        let v = x[k * q + j];
                        x[(k + 1) * q + j] -= f * v;
                    }
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..q {
                let mut s = x[k * q + j];
                for l in (k + 1)..n {
                    s -= m[k * n + l] * x[l * q + j];
                }
                x[k * q + j] = s / m[k * n + k];
            }
        }
        let sol = CMatrix::from_row_slice(n, q, &x);
        Ok(&self.cq * sol + &self.d)
    }

    /// `sigma_max(G(e^{j theta}))`.
    pub fn gain(&self, theta: f64) -> Result<f64> {
        Ok(sigma_max(&self.response(theta)?))
    }
}

/// Largest singular value of a complex matrix.
pub fn sigma_max(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.len() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn sigma_max_real(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

fn check_stable_discrete(g: &StateSpace) -> Result<()> {
    if !g.is_discrete() {
        return Err(Error::Domain("H-infinity norm needs a discrete-time system".into()));
    }
    if !g.is_stable()? {
        return Err(Error::Domain("H-infinity norm of an unstable system is unbounded".into()));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Parameter(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    Ok(())
}

pub fn hinf_norm(g: &StateSpace, tol: f64) -> Result<NormResult> {
    hinf_norm_with_grid(g, tol, DEFAULT_GRID)
}

pub fn hinf_norm_with_grid(g: &StateSpace, tol: f64, grid: usize) -> Result<NormResult> {
    check_tol(tol)?;
    check_stable_discrete(g)?;
    if grid < 3 {
        return Err(Error::Parameter(format!("grid needs at least 3 points, got {grid}")));
    }
    let sampler = FrequencySampler::new(g);
    let step = std::f64::consts::PI / (grid - 1) as f64;
    let thetas: Vec<f64> = (0..grid).map(|i| i as f64 * step).collect();
    let values = thetas
        .iter()
        .map(|t| sampler.gain(*t))
        .collect::<Result<Vec<f64>>>()?;

    let mut peaks: Vec<usize> = (0..grid)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
            let right = if i + 1 == grid { f64::NEG_INFINITY } else { values[i + 1] };
            values[i] >= left && values[i] >= right
        })
        .collect();
    peaks.sort_by(|a, b| values[*b].total_cmp(&values[*a]));
    peaks.truncate(3);

    let mut best = (values[peaks[0]], thetas[peaks[0]], 0.0);
    for &i in &peaks {
        let lo = if i == 0 { 0.0 } else { thetas[i - 1] };
        let hi = if i + 1 == grid { std::f64::consts::PI } else { thetas[i + 1] };
        let (theta, value, spread) = golden_max(&sampler, lo, hi)?;
        let (theta, value) = if value >= values[i] { (theta, value) } else { (thetas[i], values[i]) };
        if value > best.0 {
            best = (value, theta, spread);
        }
    }
    let floor = sigma_max_real(g.d());
    let value = best.0.max(floor);
    Ok(NormResult {
        value,
        peak_frequency: best.1,
        method: NormMethod::GridBisection,
        tolerance_achieved: if value > 0.0 { best.2 / value } else { 0.0 },
    })
}

/// Golden-section maximization on `[lo, hi]`; returns the best point, its
/// value and the value spread over the final bracket.
fn golden_max(s: &FrequencySampler, mut lo: f64, mut hi: f64) -> Result<(f64, f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = s.gain(x1)?;
    let mut f2 = s.gain(x2)?;
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = s.gain(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = s.gain(x2)?;
        }
    }
    let (fl, fh) = (s.gain(lo)?, s.gain(hi)?);
    let candidates = [(x1, f1), (x2, f2), (lo, fl), (hi, fh)];
    let (t, v) = candidates
        .iter()
        .copied()
        .fold((x1, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
    let spread = candidates.iter().map(|c| (v - c.1).abs()).fold(0.0, f64::max);
    Ok((t, v, spread))
}

/// True when the bounded-real LMI is feasible at `gamma`. Undecided Phase-I
/// runs count as infeasible.
pub fn kyp_feasible(g: &StateSpace, gamma: f64, opts: &SolverOptions) -> Result<bool> {
    let lmi = kyp::system_lmi(g, Gamma::Fixed(gamma))?;
    Ok(matches!(sdp::feasibility(&lmi.problem, opts)?, Feasibility::Feasible(_)))
}

pub fn kyp_norm_bisect(g: &StateSpace, tol: f64) -> Result<NormResult> {
    kyp_norm_bisect_with(g, tol, &SolverOptions::default())
}

pub fn kyp_norm_bisect_with(g: &StateSpace, tol: f64, opts: &SolverOptions) -> Result<NormResult> {
    check_tol(tol)?;
    check_stable_discrete(g)?;
    // Same transfer function, posed on the reachable part with unit
    // reachability Gramian so the LMI's certificate set stays bounded.
    let (t, t_inv) = numerics::reachable_coordinates(g.a(), g.b(), REACHABILITY_TOL)?;
    let g = &StateSpace::new(&t_inv * g.a() * &t, &t_inv * g.b(), g.c() * &t, g.d().clone(), g.domain())?;
    let estimate = hinf_norm(g, tol.min(1e-6))?;
    let mut lo = sigma_max_real(g.d());
    let mut hi = 1.5 * estimate.value;
    if hi <= 0.0 {
        // the zero system; the LMI margin needs a strictly positive bound
        hi = 1e-6;
    }
    let cap = hi * f64::powi(2.0, 20);
    while !kyp_feasible(g, hi, opts)? {
        lo = lo.max(hi);
        hi *= 2.0;
        if hi > cap {
            return Err(Error::numeric(
                "no feasible upper bound for the bounded-real bisection",
                hi,
            ));
        }
    }
    for _ in 0..200 {
        if hi - lo <= tol * hi || (lo > 0.0 && hi / lo - 1.0 < tol) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if kyp_feasible(g, mid, opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    Ok(NormResult {
        value,
        peak_frequency: estimate.peak_frequency,
        method: NormMethod::KypBisection,
        tolerance_achieved: if value > 0.0 { (hi - lo) / value } else { 0.0 },
    })
}
