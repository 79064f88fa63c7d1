//! Bounded-real LMI for discrete systems that are affine in a coefficient
//! vector.
//!
//! For `G = (A, B, C(a), D(a))` the block
//!
//! ```text
//! [ A'XA - X   A'XB         C(a)' ]
//! [ B'XA       B'XB - g I   D(a)' ]  < 0,   X > 0
//! [ C(a)       D(a)         -g I  ]
//! ```
//!
//! certifies `|G|_inf < g`. Decision variables are ordered as
//! `(g, a, vech(X))`; `g` is omitted when fixed. `vech` packs the upper
//! triangle row by row, an off-diagonal entry standing for
//! `e_i e_j' + e_j e_i'` and a diagonal entry for `e_i e_i'`.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::sdp::{AffineBlock, Coefficient, Dyad, LmiProblem};
use crate::statespace::StateSpace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Variable,
    Fixed(f64),
}

/// Number of entries of `vech` for an `n x n` symmetric matrix.
pub fn vech_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Packs the upper triangle of `x` row by row.
pub fn vech(x: &Matrix) -> Vec<f64> {
    let n = x.nrows();
    let mut v = Vec::with_capacity(vech_len(n));
    for i in 0..n {
        for j in i..n {
            v.push(x[(i, j)]);
        }
    }
    v
}

pub fn unvech(v: &[f64], n: usize) -> Result<Matrix> {
    if v.len() != vech_len(n) {
        return Err(Error::Dimension(format!(
            "vech of a {n}x{n} matrix has {} entries, got {}",
            vech_len(n),
            v.len()
        )));
    }
    let mut x = Matrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            x[(i, j)] = v[k];
            x[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(x)
}

/// The LMI together with the position of each variable group.
#[derive(Debug, Clone)]
pub struct KypLmi {
    pub problem: LmiProblem,
    /// Index of `g`, if it is a variable.
    pub gamma_index: Option<usize>,
    /// First coefficient index; coefficients are contiguous.
    pub coeff_offset: usize,
    pub coeff_count: usize,
    pub x_offset: usize,
    pub order: usize,
}

impl KypLmi {
    pub fn gamma(&self, x: &[f64]) -> Option<f64> {
        self.gamma_index.map(|i| x[i])
    }

    pub fn coefficients<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.coeff_offset..self.coeff_offset + self.coeff_count]
    }

    pub fn lyapunov(&self, x: &[f64]) -> Matrix {
        unvech(&x[self.x_offset..], self.order).expect("decision vector sized by construction")
    }

    /// Adds `X < bound I`. Realizations with uncontrollable modes leave `X`
    /// unbounded along directions that do not affect the bound, and the
    /// barrier then has no minimizer.
    pub fn with_x_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::Parameter(format!("X bound must be positive, got {bound}")));
        }
        let n = self.order;
        if n == 0 {
            return Ok(self);
        }
        let mut coefficients = vec![Coefficient::Zero; self.x_offset];
        for i in 0..n {
            for j in i..n {
                let w = if i == j { 0.5 } else { 1.0 };
                coefficients.push(Coefficient::Dyads(vec![Dyad { weight: w, left: i, right: j }]));
            }
        }
        let block = AffineBlock::structured(
            Matrix::identity(n, n) * -bound,
            coefficients,
            Matrix::identity(n, n),
        )?;
        let mut blocks = self.problem.blocks().to_vec();
        blocks.push(block);
        self.problem = LmiProblem::new(self.problem.objective().to_vec(), blocks)?;
        Ok(self)
    }

    /// Packs a decision vector; `gamma` is ignored when fixed.
    pub fn pack(&self, gamma: f64, coeffs: &[f64], lyapunov: &Matrix) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.problem.num_vars());
        if self.gamma_index.is_some() {
            x.push(gamma);
        }
        x.extend_from_slice(coeffs);
        x.extend(vech(lyapunov));
        x
    }
}

/// Builds the LMI for `(A, B, C0 + sum a_k C_k, D0 + sum a_k D_k)`.
/// Minimizing `g` is the objective when it is a variable.
pub fn bounded_real_lmi(
    a: &Matrix,
    b: &Matrix,
    c0: &Matrix,
    d0: &Matrix,
    c_lin: &[Matrix],
    d_lin: &[Matrix],
    gamma: Gamma,
) -> Result<KypLmi> {
    let n = a.nrows();
    let (p, q) = (c0.nrows(), b.ncols());
    if a.ncols() != n || b.nrows() != n || c0.ncols() != n || d0.shape() != (p, q) {
        return Err(Error::Dimension("inconsistent realization for the bounded-real LMI".into()));
    }
    if c_lin.len() != d_lin.len()
        || c_lin.iter().any(|c| c.shape() != (p, n))
        || d_lin.iter().any(|d| d.shape() != (p, q))
    {
        return Err(Error::Dimension("coefficient maps do not match the realization".into()));
    }
    let dim = n + q + p;
    let gamma_index = matches!(gamma, Gamma::Variable).then_some(0);
    let coeff_offset = gamma_index.map_or(0, |_| 1);
    let x_offset = coeff_offset + c_lin.len();
    let num_vars = x_offset + vech_len(n);

    let output_block = |c: &Matrix, d: &Matrix| {
        let mut m = Matrix::zeros(dim, dim);
        m.view_mut((n + q, 0), (p, n)).copy_from(c);
        m.view_mut((n + q, n), (p, q)).copy_from(d);
        m.view_mut((0, n + q), (n, p)).copy_from(&c.transpose());
        m.view_mut((n, n + q), (q, p)).copy_from(&d.transpose());
        m
    };
    let gamma_block = {
        let mut m = Matrix::zeros(dim, dim);
        for i in n..dim {
            m[(i, i)] = -1.0;
        }
        m
    };

    let mut constant = output_block(c0, d0);
    if let Gamma::Fixed(g) = gamma {
        constant += &gamma_block * g;
    }

    // basis: u_i = [A_i., B_i., 0]' then e_i for i < n
    let mut basis = Matrix::zeros(dim, 2 * n);
    for i in 0..n {
        for j in 0..n {
            basis[(j, i)] = a[(i, j)];
        }
        for j in 0..q {
            basis[(n + j, i)] = b[(i, j)];
        }
        basis[(i, n + i)] = 1.0;
    }

    let mut coefficients = Vec::with_capacity(num_vars);
    if gamma_index.is_some() {
        coefficients.push(Coefficient::Dense(gamma_block));
    }
    for (c, d) in c_lin.iter().zip(d_lin) {
        coefficients.push(Coefficient::Dense(output_block(c, d)));
    }
    let mut x_coefficients = Vec::with_capacity(vech_len(n));
    for i in 0..n {
        for j in i..n {
            let w = if i == j { 0.5 } else { 1.0 };
            coefficients.push(Coefficient::Dyads(vec![
                Dyad { weight: w, left: i, right: j },
                Dyad { weight: -w, left: n + i, right: n + j },
            ]));
            x_coefficients.push(Coefficient::Dyads(vec![Dyad { weight: -w, left: i, right: j }]));
        }
    }

    let mut blocks = vec![AffineBlock::structured(constant, coefficients, basis)?];
    if n > 0 {
        let mut all = vec![Coefficient::Zero; x_offset];
        all.extend(x_coefficients);
        blocks.push(AffineBlock::structured(
            Matrix::zeros(n, n),
            all,
            Matrix::identity(n, n),
        )?);
    }
    let mut objective = vec![0.0; num_vars];
    if let Some(g) = gamma_index {
        objective[g] = 1.0;
    }
    Ok(KypLmi {
        problem: LmiProblem::new(objective, blocks)?,
        gamma_index,
        coeff_offset,
        coeff_count: c_lin.len(),
        x_offset,
        order: n,
    })
}

/// Feasibility LMI certifying `|g|_inf < gamma` for a fixed system.
pub fn system_lmi(g: &StateSpace, gamma: Gamma) -> Result<KypLmi> {
    bounded_real_lmi(g.a(), g.b(), g.c(), g.d(), &[], &[], gamma)
}
