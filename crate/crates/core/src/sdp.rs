//! Dense LMI solver.
//!
//! Minimizes `c^T x` subject to `F_b(x) = F_b0 + sum_i x_i F_bi < 0` for every
//! block `b` with a log-det barrier interior-point method: damped Newton
//! centering on `t c^T x - sum_b log det(-F_b(x) - eps_b I)` followed by a
//! geometric increase of `t`. The barrier is placed on the margin-shifted set
//! `F_b(x) <= -eps_b I` so every iterate is strictly feasible with margin.
//!
//! Coefficient matrices are either dense or sums of symmetric dyads
//! `w (v_p v_q^T + v_q v_p^T)` over a per-block basis `V`. Matrix variables
//! (vech-packed symmetric `X`) are expressed as dyads, which lets the Hessian
//! entries `tr(S F_i S F_j)` be read off `V^T S V` instead of forming
//! thousands of dense products.

use nalgebra::linalg::{Cholesky, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::{self, CholeskyOutcome, Matrix};

/// `weight * (v_left v_right^T + v_right v_left^T)` for basis columns `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dyad {
    pub weight: f64,
    pub left: usize,
    pub right: usize,
}

/// Coefficient matrix `F_i` of one decision variable in one block.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Zero,
    Dense(Matrix),
    Dyads(Vec<Dyad>),
}

/// Affine symmetric constraint `F0 + sum_i x_i F_i < 0`.
#[derive(Debug, Clone)]
pub struct AffineBlock {
    constant: Matrix,
    coefficients: Vec<Coefficient>,
    basis: Matrix,
}

impl AffineBlock {
    /// Block with dense coefficient matrices (symmetrized on ingest).
    pub fn dense(constant: Matrix, coefficients: Vec<Matrix>) -> Result<Self> {
        let dim = constant.nrows();
        AffineBlock::structured(
            constant,
            coefficients.into_iter().map(Coefficient::Dense).collect(),
            Matrix::zeros(dim, 0),
        )
    }

    /// Block with mixed dense and dyadic coefficients over `basis` (one
    /// column per basis vector).
    pub fn structured(constant: Matrix, coefficients: Vec<Coefficient>, basis: Matrix) -> Result<Self> {
        numerics::ensure_square(&constant, "block constant")?;
        numerics::ensure_finite(&constant, "block constant")?;
        let dim = constant.nrows();
        if basis.nrows() != dim {
            return Err(Error::Dimension(format!(
                "basis has {} rows, block dimension is {dim}",
                basis.nrows()
            )));
        }
        numerics::ensure_finite(&basis, "block basis")?;
        let mut coefficients = coefficients;
        for (i, c) in coefficients.iter_mut().enumerate() {
            match c {
                Coefficient::Zero => {}
                Coefficient::Dense(m) => {
                    if m.shape() != (dim, dim) {
                        return Err(Error::Dimension(format!(
                            "coefficient {i} is {}x{}, block dimension is {dim}",
                            m.nrows(),
                            m.ncols()
                        )));
                    }
                    numerics::ensure_finite(m, "block coefficient")?;
                    *m = numerics::symmetrize(m);
                }
                Coefficient::Dyads(ds) => {
                    if let Some(d) = ds
                        .iter()
                        .find(|d| d.left >= basis.ncols() || d.right >= basis.ncols() || !d.weight.is_finite())
                    {
                        return Err(Error::Dimension(format!(
                            "coefficient {i} references basis vector outside 0..{} ({d:?})",
                            basis.ncols()
                        )));
                    }
                }
            }
        }
        Ok(AffineBlock {
            constant: numerics::symmetrize(&constant),
            coefficients,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn num_vars(&self) -> usize {
        self.coefficients.len()
    }

    pub fn constant(&self) -> &Matrix {
        &self.constant
    }

    pub fn coefficient(&self, i: usize) -> &Coefficient {
        &self.coefficients[i]
    }

    /// `F_i` expanded to a dense matrix.
    pub fn coefficient_matrix(&self, i: usize) -> Matrix {
        let dim = self.dim();
        match &self.coefficients[i] {
            Coefficient::Zero => Matrix::zeros(dim, dim),
            Coefficient::Dense(m) => m.clone(),
            Coefficient::Dyads(ds) => {
                let mut out = Matrix::zeros(dim, dim);
                for d in ds {
                    let p = self.basis.column(d.left);
                    let q = self.basis.column(d.right);
                    out += (p * q.transpose() + q * p.transpose()) * d.weight;
                }
                out
            }
        }
    }

    /// `F(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Matrix {
        let mut f = self.constant.clone();
        let r = self.basis.ncols();
        let mut w = Matrix::zeros(r, r);
        let mut any_dyad = false;
        for (c, xi) in self.coefficients.iter().zip(x) {
            if *xi == 0.0 {
                continue;
            }
            match c {
                Coefficient::Zero => {}
                Coefficient::Dense(m) => f += m * *xi,
                Coefficient::Dyads(ds) => {
                    any_dyad = true;
                    for d in ds {
                        let v = xi * d.weight;
                        w[(d.left, d.right)] += v;
                        w[(d.right, d.left)] += v;
                    }
                }
            }
        }
        if any_dyad {
            f += &self.basis * w * self.basis.transpose();
        }
        f
    }

    fn with_extra(&self, extra: Coefficient) -> AffineBlock {
        let mut coefficients = self.coefficients.clone();
        coefficients.push(extra);
        AffineBlock {
            constant: self.constant.clone(),
            coefficients,
            basis: self.basis.clone(),
        }
    }
}

/// Minimize `objective^T x` subject to every block being negative definite.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    objective: Vec<f64>,
    blocks: Vec<AffineBlock>,
}

impl LmiProblem {
    pub fn new(objective: Vec<f64>, blocks: Vec<AffineBlock>) -> Result<Self> {
        if let Some((i, b)) = blocks
            .iter()
            .enumerate()
            .find(|(_, b)| b.num_vars() != objective.len())
        {
            return Err(Error::Dimension(format!(
                "block {i} has {} coefficients for {} variables",
                b.num_vars(),
                objective.len()
            )));
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("objective has a non-finite entry".into()));
        }
        Ok(LmiProblem { objective, blocks })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn blocks(&self) -> &[AffineBlock] {
        &self.blocks
    }

    /// Total constraint rows, the numerator of the duality-gap surrogate.
    pub fn constraint_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the gap surrogate `rows / t` drops below this.
    pub gap_tol: f64,
    /// Newton step budget per phase.
    pub max_newton: usize,
    /// Factor applied to the barrier weight after each centering.
    pub barrier_mult: f64,
    /// Strictness margin per block row: blocks must satisfy
    /// `F(x) <= -epsilon_margin * dim * I`.
    pub epsilon_margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-7,
            max_newton: 200,
            barrier_mult: 10.0,
            epsilon_margin: 1e-10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tol > 0.0 && self.gap_tol < 1.0) {
            return Err(Error::Parameter(format!("gap_tol must lie in (0, 1), got {}", self.gap_tol)));
        }
        if self.max_newton == 0 {
            return Err(Error::Parameter("max_newton must be positive".into()));
        }
        if !(self.barrier_mult > 1.0 && self.barrier_mult.is_finite()) {
            return Err(Error::Parameter(format!(
                "barrier_mult must exceed 1, got {}",
                self.barrier_mult
            )));
        }
        if !(self.epsilon_margin >= 0.0 && self.epsilon_margin.is_finite()) {
            return Err(Error::Parameter("epsilon_margin must be nonnegative".into()));
        }
        Ok(())
    }

    /// Margin applied to a block of dimension `dim`.
    pub fn margin(&self, dim: usize) -> f64 {
        self.epsilon_margin * dim as f64
    }
}

/// Centering stops when half the squared Newton decrement falls below this.
const CENTERING_TOL: f64 = 1e-6;
/// Below this decrement a failed sufficient-decrease test is taken to mean
/// the barrier is flat to rounding and centering stops.
const STALL_DECREMENT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SdpResult {
    pub x_opt: Vec<f64>,
    pub objective_value: f64,
    pub status: SolveStatus,
    /// Largest eigenvalue over all blocks at `x_opt` (negative when certified).
    pub max_block_eig: f64,
    /// Phase-II Newton steps.
    pub iterations: usize,
    pub phase1_iterations: usize,
    /// `c^T x` after each completed centering.
    pub objective_trace: Vec<f64>,
    /// Final duality-gap surrogate `rows / t`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible,
    /// Phase I ran out of iterations before deciding.
    Indeterminate { iterations: usize, best_shift: f64 },
}

/// Minimizes `c^T x` from the origin (Phase I if the origin is not strictly
/// feasible).
pub fn solve_min(p: &LmiProblem, opts: &SolverOptions) -> Result<SdpResult> {
    solve_min_from(p, &vec![0.0; p.num_vars()], opts)
}

/// Minimizes `c^T x` starting from `x0`; Phase I runs first when `x0` is not
/// strictly feasible with margin.
pub fn solve_min_from(p: &LmiProblem, x0: &[f64], opts: &SolverOptions) -> Result<SdpResult> {
    opts.validate()?;
    if p.num_vars() == 0 {
        return Err(Error::Parameter("an LMI problem needs at least one variable".into()));
    }
    if x0.len() != p.num_vars() {
        return Err(Error::Dimension(format!(
            "starting point has {} entries for {} variables",
            x0.len(),
            p.num_vars()
        )));
    }
    let engine = Engine::new(p, opts);
    let (start, phase1_iterations) = if engine.strictly_feasible(x0) {
        (x0.to_vec(), 0)
    } else {
        match phase_one(p, x0, opts)? {
            (PhaseOne::Feasible(x), it) => (x, it),
            (PhaseOne::Infeasible(x), it) => {
                return Ok(SdpResult {
                    objective_value: p.objective_value(&x),
                    max_block_eig: max_block_eig(p, &x),
                    x_opt: x,
                    status: SolveStatus::Infeasible,
                    iterations: 0,
                    phase1_iterations: it,
                    objective_trace: Vec::new(),
                    gap: f64::INFINITY,
                })
            }
            (PhaseOne::Undecided(x, _), it) => {
                return Ok(SdpResult {
                    objective_value: p.objective_value(&x),
                    max_block_eig: max_block_eig(p, &x),
                    x_opt: x,
                    status: SolveStatus::MaxIter,
                    iterations: 0,
                    phase1_iterations: it,
                    objective_trace: Vec::new(),
                    gap: f64::INFINITY,
                })
            }
        }
    };

    let run = engine.minimize(start, |_| false, |_, gap| gap < opts.gap_tol)?;
    let status = match run.stop {
        Stop::Converged => SolveStatus::Optimal,
        Stop::Early => unreachable!("phase II has no early stop"),
        Stop::Budget => SolveStatus::MaxIter,
    };
    if !certify(p, &run.x, opts)? {
        return Err(Error::Solver(format!(
            "iterate failed margin certification (max block eigenvalue {:e})",
            max_block_eig(p, &run.x)
        )));
    }
    Ok(SdpResult {
        objective_value: p.objective_value(&run.x),
        max_block_eig: max_block_eig(p, &run.x),
        x_opt: run.x,
        status,
        iterations: run.iterations,
        phase1_iterations,
        objective_trace: run.trace,
        gap: run.gap,
    })
}

/// Finds a point with every block `<= -eps I`, or decides there is none.
pub fn feasibility(p: &LmiProblem, opts: &SolverOptions) -> Result<Feasibility> {
    opts.validate()?;
    if p.num_vars() == 0 {
        return Ok(if certify(p, &[], opts)? {
            Feasibility::Feasible(Vec::new())
        } else {
            Feasibility::Infeasible
        });
    }
    let x0 = vec![0.0; p.num_vars()];
    if Engine::new(p, opts).strictly_feasible(&x0) && certify(p, &x0, opts)? {
        return Ok(Feasibility::Feasible(x0));
    }
    Ok(match phase_one(p, &x0, opts)? {
        (PhaseOne::Feasible(x), _) => {
            if certify(p, &x, opts)? {
                Feasibility::Feasible(x)
            } else {
                Feasibility::Infeasible
            }
        }
        (PhaseOne::Infeasible(_), _) => Feasibility::Infeasible,
        (PhaseOne::Undecided(_, shift), iterations) => Feasibility::Indeterminate {
            iterations,
            best_shift: shift,
        },
    })
}

/// Independent check that every block satisfies `F_b(x) <= -eps_b I`.
pub fn certify(p: &LmiProblem, x: &[f64], opts: &SolverOptions) -> Result<bool> {
    for b in &p.blocks {
        let mut m = -b.evaluate(x);
        let eps = opts.margin(b.dim());
        for i in 0..b.dim() {
            m[(i, i)] -= eps;
        }
        if !matches!(numerics::cholesky_pd(&m)?, CholeskyOutcome::Factor(_)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest eigenvalue of any block at `x`.
pub fn max_block_eig(p: &LmiProblem, x: &[f64]) -> f64 {
    p.blocks
        .iter()
        .filter(|b| b.dim() > 0)
        .map(|b| {
            SymmetricEigen::new(b.evaluate(x))
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

enum PhaseOne {
    Feasible(Vec<f64>),
    Infeasible(Vec<f64>),
    Undecided(Vec<f64>, f64),
}

/// Minimizes a shift `s` over `F_b(x) - s I < 0`, stopping as soon as `s < 0`.
fn phase_one(p: &LmiProblem, x0: &[f64], opts: &SolverOptions) -> Result<(PhaseOne, usize)> {
    let nv = p.num_vars();
    let blocks: Vec<AffineBlock> = p
        .blocks
        .iter()
        .map(|b| b.with_extra(Coefficient::Dense(-Matrix::identity(b.dim(), b.dim()))))
        .collect();
    let mut objective = vec![0.0; nv + 1];
    objective[nv] = 1.0;
    let aux = LmiProblem::new(objective, blocks)?;

    let lambda = p
        .blocks
        .iter()
        .filter(|b| b.dim() > 0)
        .map(|b| {
            let mut f = b.evaluate(x0);
            let eps = opts.margin(b.dim());
            for i in 0..b.dim() {
                f[(i, i)] += eps;
            }
            SymmetricEigen::new(f).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut start = x0.to_vec();
    start.push(lambda.abs().max(1.0) + lambda.max(0.0));

    let engine = Engine::new(&aux, opts);
    let run = engine.minimize(
        start,
        |x| x[nv] < 0.0,
        // s* >= s - gap > 0 proves infeasibility
        |obj, gap| obj - gap > 0.0 || gap < opts.gap_tol,
    )?;
    let mut x = run.x;
    let shift = x.pop().unwrap_or(f64::INFINITY);
    let outcome = match run.stop {
        Stop::Early => PhaseOne::Feasible(x),
        Stop::Converged if shift < 0.0 => PhaseOne::Feasible(x),
        Stop::Converged => PhaseOne::Infeasible(x),
        Stop::Budget => PhaseOne::Undecided(x, shift),
    };
    Ok((outcome, run.iterations))
}

enum Stop {
    Converged,
    Early,
    Budget,
}

struct Run {
    x: Vec<f64>,
    stop: Stop,
    iterations: usize,
    trace: Vec<f64>,
    gap: f64,
}

struct Engine<'a> {
    p: &'a LmiProblem,
    opts: &'a SolverOptions,
    /// Per block: variables with dense coefficients and with dyadic ones.
    dense: Vec<Vec<usize>>,
    dyadic: Vec<Vec<usize>>,
}

/// Barrier value, gradient and Hessian at a point.
struct Local {
    phi: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(p: &'a LmiProblem, opts: &'a SolverOptions) -> Self {
        let mut dense = Vec::new();
        let mut dyadic = Vec::new();
        for b in &p.blocks {
            let mut de = Vec::new();
            let mut dy = Vec::new();
            for (i, c) in b.coefficients.iter().enumerate() {
                match c {
                    Coefficient::Zero => {}
                    Coefficient::Dense(_) => de.push(i),
                    Coefficient::Dyads(ds) if !ds.is_empty() => dy.push(i),
                    Coefficient::Dyads(_) => {}
                }
            }
            dense.push(de);
            dyadic.push(dy);
        }
        Engine { p, opts, dense, dyadic }
    }

    /// `(-F_b(x) - eps_b I)` for each block.
    fn slack(&self, b: &AffineBlock, x: &[f64]) -> Matrix {
        let mut m = -b.evaluate(x);
        let eps = self.opts.margin(b.dim());
        for i in 0..b.dim() {
            m[(i, i)] -= eps;
        }
        m
    }

    /// Barrier value, or `None` outside the domain.
    fn barrier(&self, x: &[f64]) -> Option<f64> {
        let mut phi = 0.0;
        for b in &self.p.blocks {
            if b.dim() == 0 {
                continue;
            }
            let chol = Cholesky::new(self.slack(b, x))?;
            phi -= 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        }
        phi.is_finite().then_some(phi)
    }

    fn strictly_feasible(&self, x: &[f64]) -> bool {
        self.barrier(x).is_some()
    }

    fn local(&self, x: &[f64]) -> Option<Local> {
        let nv = self.p.num_vars();
        let mut grad = vec![0.0; nv];
        let mut hess = vec![0.0; nv * nv];
        let mut phi = 0.0;
        for (bi, b) in self.p.blocks.iter().enumerate() {
            if b.dim() == 0 {
                continue;
            }
            let chol = Cholesky::new(self.slack(b, x))?;
            phi -= 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let s = chol.inverse();
            self.accumulate(bi, b, &s, &mut grad, &mut hess);
        }
        Some(Local { phi, grad, hess })
    }

    /// Adds `tr(S F_i)` to the gradient and `tr(S F_i S F_j)` to the Hessian.
    fn accumulate(&self, bi: usize, b: &AffineBlock, s: &Matrix, grad: &mut [f64], hess: &mut [f64]) {
        let nv = self.p.num_vars();
        let dense = &self.dense[bi];
        let dyadic = &self.dyadic[bi];
        let dyads_of = |i: usize| match &b.coefficients[i] {
            Coefficient::Dyads(ds) => ds.as_slice(),
            _ => &[],
        };
        let dense_of = |i: usize| match &b.coefficients[i] {
            Coefficient::Dense(m) => m,
            _ => unreachable!(),
        };

        let y = if dyadic.is_empty() {
            Matrix::zeros(0, 0)
        } else {
            b.basis.transpose() * s * &b.basis
        };

        let mut g_mats = Vec::with_capacity(dense.len());
        for &i in dense {
            let fi = dense_of(i);
            grad[i] += s.component_mul(fi).sum();
            g_mats.push(s * fi * s);
        }
        for (a, &i) in dense.iter().enumerate() {
            for &j in &dense[a..] {
                let h = g_mats[a].component_mul(dense_of(j)).sum();
                hess[i * nv + j] += h;
                if i != j {
                    hess[j * nv + i] += h;
                }
            }
        }
        if !dyadic.is_empty() {
            for (a, &i) in dense.iter().enumerate() {
                let z = b.basis.transpose() * &g_mats[a] * &b.basis;
                for &j in dyadic {
                    let h: f64 = dyads_of(j)
                        .iter()
                        .map(|d| 2.0 * d.weight * z[(d.left, d.right)])
                        .sum();
                    hess[i * nv + j] += h;
                    hess[j * nv + i] += h;
                }
            }
        }

        let r = y.nrows();
        let yv = y.as_slice();
        // column-major: y[(p, q)] = yv[p + q * r]; y is symmetric
        let at = |p: usize, q: usize| yv[p + q * r];
        for &i in dyadic {
            grad[i] += dyads_of(i)
                .iter()
                .map(|d| 2.0 * d.weight * at(d.left, d.right))
                .sum::<f64>();
        }
        for (a, &i) in dyadic.iter().enumerate() {
            let di = dyads_of(i);
            let row = i * nv;
            for &j in &dyadic[a..] {
                let mut h = 0.0;
                for d1 in di {
                    for d2 in dyads_of(j) {
                        h += d1.weight
                            * d2.weight
                            * (at(d1.left, d2.right) * at(d1.right, d2.left)
                                + at(d1.left, d2.left) * at(d1.right, d2.right));
                    }
                }
                hess[row + j] += 2.0 * h;
                if i != j {
                    hess[j * nv + i] += 2.0 * h;
                }
            }
        }
    }

    fn minimize(
        &self,
        mut x: Vec<f64>,
        early: impl Fn(&[f64]) -> bool,
        converged: impl Fn(f64, f64) -> bool,
    ) -> Result<Run> {
        let nv = self.p.num_vars();
        let c = self.p.objective();
        let rows = self.p.constraint_rows().max(1) as f64;
        let mut iterations = 0;
        let mut trace = Vec::new();

        let Some(first) = self.local(&x) else {
            return Err(Error::Solver("starting point is not strictly feasible".into()));
        };
        // Barrier weight that best balances the objective against the
        // barrier gradient at the start: argmin_t |t c + g|_{H^-1}.
        let mut t = {
            let mut h = first.hess.clone();
            let factor = factor_spd(&mut h, nv);
            let mut t0 = 1.0;
            if factor {
                let hc = solve_factored(&h, nv, c);
                let hg = solve_factored(&h, nv, &first.grad);
                let chc: f64 = dot(c, &hc);
                let chg: f64 = dot(c, &hg);
                if chc > 0.0 && (-chg / chc).is_finite() && -chg / chc > 0.0 {
                    t0 = -chg / chc;
                }
            }
            t0.max(1e-8)
        };

        loop {
            // centering
            loop {
                let Some(loc) = self.local(&x) else {
                    return Err(Error::Solver("iterate left the barrier domain".into()));
                };
                let rhs: Vec<f64> = c.iter().zip(&loc.grad).map(|(ci, gi)| -(t * ci + gi)).collect();
                let step = newton_direction(loc.hess, nv, &rhs)
                    .ok_or_else(|| Error::Solver("Newton system is not positive definite".into()))?;
                let decrement = dot(&rhs, &step).max(0.0);
                if decrement / 2.0 <= CENTERING_TOL {
                    break;
                }
                if iterations >= self.opts.max_newton {
                    return Ok(Run {
                        x,
                        stop: Stop::Budget,
                        iterations,
                        trace,
                        gap: rows / t,
                    });
                }
                let psi0 = t * dot(c, &x) + loc.phi;
                let damped = 1.0 / (1.0 + decrement.sqrt());
                let mut alpha = 1.0;
                let mut accepted = None;
                while alpha > damped {
                    let trial = axpy(&x, alpha, &step);
                    if let Some(phi) = self.barrier(&trial) {
                        if t * dot(c, &trial) + phi <= psi0 - 0.25 * alpha * decrement {
                            accepted = Some(trial);
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                let next = match accepted {
                    Some(v) => v,
                    None if decrement < STALL_DECREMENT => break,
                    None => {
                        // the damped step stays inside the Dikin ellipsoid
                        let mut a = damped;
                        loop {
                            let trial = axpy(&x, a, &step);
                            if self.strictly_feasible(&trial) {
                                break trial;
                            }
                            a *= 0.5;
                            if a < 1e-12 {
                                return Err(Error::Solver("line search failed to stay feasible".into()));
                            }
                        }
                    }
                };
                x = next;
                iterations += 1;
                if early(&x) {
                    return Ok(Run {
                        x,
                        stop: Stop::Early,
                        iterations,
                        trace,
                        gap: rows / t,
                    });
                }
            }
            let obj = dot(c, &x);
            trace.push(obj);
            let gap = rows / t;
            if converged(obj, gap) {
                return Ok(Run {
                    x,
                    stop: Stop::Converged,
                    iterations,
                    trace,
                    gap,
                });
            }
            t *= self.opts.barrier_mult;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

/// Solves `H d = rhs`, adding a growing diagonal shift if `H` is numerically
/// indefinite.
fn newton_direction(hess: Vec<f64>, n: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    let diag_max = (0..n).map(|i| hess[i * n + i].abs()).fold(0.0, f64::max);
    let mut shift = 0.0;
    for _ in 0..8 {
        let mut h = hess.clone();
        for i in 0..n {
            h[i * n + i] += shift;
        }
        if factor_spd(&mut h, n) {
            return Some(solve_factored(&h, n, rhs));
        }
        shift = if shift == 0.0 { 1e-14 * diag_max.max(1e-300) } else { shift * 100.0 };
    }
    None
}

/// In-place Cholesky of a row-major SPD matrix; the lower triangle receives
/// `L`. Returns false on a non-positive pivot.
fn factor_spd(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        let (done, rest) = a.split_at_mut(i * n);
        let row_i = &mut rest[..n];
        for j in 0..i {
            let row_j = &done[j * n..j * n + j];
            let s = row_i[j] - dot_unrolled(&row_i[..j], row_j);
            row_i[j] = s / done[j * n + j];
        }
        let d = row_i[i] - dot_unrolled(&row_i[..i], &row_i[..i]);
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        row_i[i] = d.sqrt();
    }
    true
}

fn dot_unrolled(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for k in 0..chunks {
        let (x, y) = (&a[k * 8..k * 8 + 8], &b[k * 8..k * 8 + 8]);
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = acc.iter().sum::<f64>();
    for k in chunks * 8..a.len() {
        s += a[k] * b[k];
    }
    s
}

fn solve_factored(l: &[f64], n: usize, rhs: &[f64]) -> Vec<f64> {
    let mut y = rhs.to_vec();
    for i in 0..n {
        let s = dot_unrolled(&l[i * n..i * n + i], &y[..i]);
        y[i] = (y[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}
