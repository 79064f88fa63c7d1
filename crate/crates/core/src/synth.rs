//! FIR synthesis: minimize the H-infinity norm of the fast-sample/hold error
//! system over the filter coefficients via the bounded-real LMI.

use nalgebra::linalg::SymmetricEigen;

use crate::error::{Error, Result};
use crate::error_system::{self, AffineErrorSystem};
use crate::fir::FirFilter;
use crate::hinf;
use crate::kyp::{self, Gamma, KypLmi};
use crate::numerics::{self, CholeskyOutcome, Matrix};
use crate::sdp::{self, SolveStatus, SolverOptions};
use crate::statespace::StateSpace;

/// Relative tolerance of the independent norm check on designed filters.
pub const VERIFY_TOL: f64 = 1e-6;

/// Upper bound on the Lyapunov certificate relative to the starting one.
pub const X_BOUND_RATIO: f64 = 1e8;

pub use crate::hinf::REACHABILITY_TOL;

/// One synthesis run.
#[derive(Debug, Clone)]
pub struct DesignSpec {
    /// Analog filter to approximate.
    pub target: StateSpace,
    /// Input-shaping filter describing admissible analog inputs.
    pub characteristic: StateSpace,
    /// Sampling period.
    pub h: f64,
    /// Allowed delay in sampling periods.
    pub delay: usize,
    /// Upsampling ratio; 1 runs the filter at the sampling rate.
    pub upsampling: usize,
    /// FIR length.
    pub taps: usize,
    /// Fast-lifting factor used to approximate the sampled-data system.
    pub factor: usize,
    pub solver: SolverOptions,
}

impl DesignSpec {
    /// Tap period `h / L` of the designed filter.
    pub fn tap_period(&self) -> f64 {
        self.h / self.upsampling as f64
    }

    /// Error system for this design; single-rate assembly when `L = 1`.
    pub fn error_system(&self) -> Result<AffineErrorSystem> {
        if self.upsampling == 1 {
            error_system::build_single_rate(
                &self.target,
                &self.characteristic,
                self.h,
                self.delay,
                self.taps,
                self.factor,
            )
        } else {
            self.multi_rate_error_system()
        }
    }

    /// Error system built through the multi-rate assembly even when `L = 1`.
    pub fn multi_rate_error_system(&self) -> Result<AffineErrorSystem> {
        error_system::build_multi_rate(
            &self.target,
            &self.characteristic,
            self.h,
            self.delay,
            self.taps,
            self.upsampling,
            self.factor,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub status: SolveStatus,
    pub iterations: usize,
    pub phase1_iterations: usize,
    /// Objective after each barrier stage.
    pub objective_trace: Vec<f64>,
    pub max_block_eig: f64,
    pub gap: f64,
    pub error_order: usize,
    pub num_vars: usize,
    /// Bound used by the strictly feasible starting point.
    pub initial_gamma: f64,
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub filter: FirFilter,
    /// Certified H-infinity bound from the LMI.
    pub gamma: f64,
    /// Independently computed norm of the error system with the designed filter.
    pub verified_norm: f64,
    pub lyapunov_x: Matrix,
    pub diagnostics: Diagnostics,
}

pub fn design_fir(spec: &DesignSpec) -> Result<DesignResult> {
    let sys = spec.error_system()?;
    design_for_system(&sys, spec.tap_period(), &spec.solver)
}

/// Solves the minimum-bound LMI for an already assembled error system.
pub fn design_for_system(
    sys: &AffineErrorSystem,
    tap_period: f64,
    solver: &SolverOptions,
) -> Result<DesignResult> {
    solver.validate()?;
    // Unreachable states (the lifted filter's idle shift stages, the second
    // copy of the characteristic's state) leave the certificate unbounded and
    // weakly reachable ones make it badly scaled, so the LMI is posed in
    // coordinates with unit reachability Gramian.
    let (t, t_inv) = numerics::reachable_coordinates(sys.a(), sys.b(), REACHABILITY_TOL)?;
    let a_r = &t_inv * sys.a() * &t;
    let b_r = &t_inv * sys.b();
    let c_r = sys.c0() * &t;
    let c_lin_r: Vec<Matrix> = sys.c_lin().iter().map(|c| c * &t).collect();
    let lmi = kyp::bounded_real_lmi(&a_r, &b_r, &c_r, sys.d0(), &c_lin_r, sys.d_lin(), Gamma::Variable)?;
    let (x0, initial_gamma) = starting_point(&a_r, sys, &lmi, solver)?;
    let x_scale = SymmetricEigen::new(lmi.lyapunov(&x0))
        .eigenvalues
        .iter()
        .copied()
        .fold(1.0, f64::max);
    let lmi = lmi.with_x_bound(X_BOUND_RATIO * x_scale)?;
    let r = sdp::solve_min_from(&lmi.problem, &x0, solver)?;
    if r.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!(
            "bound minimization ended with {:?} after {} Newton steps (phase I {}), max block eigenvalue {:e}",
            r.status, r.iterations, r.phase1_iterations, r.max_block_eig
        )));
    }
    let gamma = lmi.gamma(&r.x_opt).expect("gamma is a decision variable");
    let coeffs = lmi.coefficients(&r.x_opt).to_vec();
    let lyapunov_x = lmi.lyapunov(&r.x_opt);
    let filter = FirFilter::new(coeffs, tap_period)?;
    let verified_norm = hinf::hinf_norm(&sys.realize(filter.coeffs())?, VERIFY_TOL)?.value;
    Ok(DesignResult {
        filter,
        gamma,
        verified_norm,
        lyapunov_x,
        diagnostics: Diagnostics {
            status: r.status,
            iterations: r.iterations,
            phase1_iterations: r.phase1_iterations,
            objective_trace: r.objective_trace,
            max_block_eig: r.max_block_eig,
            gap: r.gap,
            error_order: sys.order(),
            num_vars: lmi.problem.num_vars(),
            initial_gamma,
        },
    })
}

/// Strictly feasible start with zero coefficients: `X` a multiple of the
/// solution of `A'XA - X = -I` and, for each multiple on a coarse grid, the
/// smallest certifiable `gamma` found by bisection. The best pair is
/// returned with `gamma` inflated by 10%.
fn starting_point(
    a: &Matrix,
    sys: &AffineErrorSystem,
    lmi: &KypLmi,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, f64)> {
    let zeros = vec![0.0; sys.taps()];
    let n = a.nrows();
    let x_lyap = numerics::discrete_lyapunov(a, &Matrix::identity(n, n))?;
    let base = hinf::hinf_norm(&sys.realize(&zeros)?, VERIFY_TOL)?.value.max(1e-3);
    let feasible = |gamma: f64, delta: f64| sdp::certify(&lmi.problem, &lmi.pack(gamma, &zeros, &(&x_lyap * delta)), opts);
    let mut best: Option<(f64, f64)> = None;
    for k in -16..=16 {
        let delta = 10f64.powf(k as f64 / 2.0);
        let mut hi = 2.0 * base;
        let mut found = false;
        for _ in 0..30 {
            if feasible(hi, delta)? {
                found = true;
                break;
            }
            hi *= 2.0;
        }
        if !found {
            continue;
        }
        let mut lo = base;
        for _ in 0..30 {
            if hi / lo - 1.0 < 1e-3 {
                break;
            }
            let mid = (lo * hi).sqrt();
            if feasible(mid, delta)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if best.map_or(true, |(g, _)| hi < g) {
            best = Some((hi, delta));
        }
    }
    Ok(match best {
        Some((gamma, delta)) => {
            let gamma = 1.1 * gamma;
            (lmi.pack(gamma, &zeros, &(&x_lyap * delta)), gamma)
        }
        // Phase I takes over
        None => (lmi.pack(2.0 * base, &zeros, &x_lyap), 2.0 * base),
    })
}

/// Designs one filter per term `(m_i, G_i)` with `spec.target` and
/// `spec.delay` replaced by the term, and sums them tapwise. Returns the sum,
/// the per-term bounds and their total.
pub fn design_multi_delay(
    terms: &[(usize, StateSpace)],
    spec: &DesignSpec,
) -> Result<(FirFilter, Vec<f64>, f64)> {
    if terms.is_empty() {
        return Err(Error::Parameter("at least one target term is required".into()));
    }
    let mut filters = Vec::with_capacity(terms.len());
    let mut gammas = Vec::with_capacity(terms.len());
    for (index, (delay, g)) in terms.iter().enumerate() {
        let term_spec = DesignSpec {
            target: g.clone(),
            delay: *delay,
            ..spec.clone()
        };
        let r = design_fir(&term_spec).map_err(|e| Error::Term {
            index,
            source: Box::new(e),
        })?;
        filters.push(r.filter);
        gammas.push(r.gamma);
    }
    let bound = gammas.iter().sum();
    Ok((FirFilter::sum(&filters)?, gammas, bound))
}

/// Norm of the multi-delay error system with filter `kbar` against the sum of
/// the per-term bounds. Fails when `lhs > rhs + tol`.
pub fn verify_bound(
    terms: &[(usize, StateSpace)],
    kbar: &FirFilter,
    spec: &DesignSpec,
    gammas: &[f64],
    tol: f64,
) -> Result<(f64, f64)> {
    let sys = error_system::build_multi_delay(
        terms,
        &spec.characteristic,
        spec.h,
        kbar.taps(),
        spec.upsampling,
        spec.factor,
    )?;
    let lhs = hinf::hinf_norm(&sys.realize(kbar.coeffs())?, VERIFY_TOL)?.value;
    let rhs: f64 = gammas.iter().sum();
    if lhs > rhs + tol {
        return Err(Error::BoundViolation { lhs, rhs });
    }
    Ok((lhs, rhs))
}

/// True when `x` passes the Cholesky positive-definiteness test.
pub fn certificate_is_positive(x: &Matrix) -> Result<bool> {
    Ok(matches!(numerics::cholesky_pd(x)?, CholeskyOutcome::Factor(_)))
}
