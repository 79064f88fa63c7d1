//! Dense real matrix kernels shared by every other module.
//!
//! Storage is [`nalgebra::DMatrix`]; this module adds the handful of
//! operations the design pipeline needs with the error reporting it expects.

use nalgebra::linalg::Schur;
pub use nalgebra::Complex;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix.
pub type Matrix = DMatrix<f64>;

/// Dense complex matrix, used transiently for frequency responses.
pub type CMatrix = DMatrix<Complex<f64>>;

/// Relative asymmetry accepted by [`cholesky_pd`] before rejecting the input.
pub const SYMMETRY_TOL: f64 = 1e-8;

const SCHUR_MAX_ITER: usize = 100_000;

pub fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if let Some(v) = m.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("{what} has a non-finite entry ({v})")));
    }
    Ok(())
}

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Matrix> {
    if entries.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = Matrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

/// Matrix exponential by scaling and squaring with a Padé approximant.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    ensure_square(m, "expm argument")?;
    ensure_finite(m, "expm argument")?;
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let e = m.exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("matrix exponential overflowed", m.norm()));
    }
    Ok(e)
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    ensure_square(m, "eigenvalue argument")?;
    ensure_finite(m, "eigenvalue argument")?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::numeric(
            format!("QR iteration did not converge within {SCHUR_MAX_ITER} sweeps"),
            m.norm(),
        )
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest eigenvalue magnitude. Zero for an empty matrix.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max))
}

/// Largest real part of the spectrum; `-inf` for an empty matrix.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Outcome of a positive-definiteness test.
#[derive(Debug, Clone, PartialEq)]
pub enum CholeskyOutcome {
    /// Lower-triangular `L` with `L * L^T` equal to the symmetrized input.
    Factor(Matrix),
    /// The input is not positive definite; `pivot` is the 1-based position of
    /// the first non-positive pivot.
    NotPositiveDefinite { pivot: usize },
}

impl CholeskyOutcome {
    pub fn is_positive_definite(&self) -> bool {
        matches!(self, CholeskyOutcome::Factor(_))
    }
}

/// Cholesky factorization of a symmetric matrix, reporting where it breaks
/// down when the matrix is not positive definite.
pub fn cholesky_pd(m: &Matrix) -> Result<CholeskyOutcome> {
    ensure_square(m, "cholesky argument")?;
    ensure_finite(m, "cholesky argument")?;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Input(format!(
            "matrix is not symmetric (relative asymmetry {:e})",
            asym / scale
        )));
    }
    let s = symmetrize(m);
    let n = s.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Ok(CholeskyOutcome::NotPositiveDefinite { pivot: j + 1 });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(CholeskyOutcome::Factor(l))
}

/// Integer matrix power by repeated squaring.
pub fn matrix_power(m: &Matrix, k: usize) -> Matrix {
    let n = m.nrows();
    let mut result = Matrix::identity(n, n);
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Block-diagonal concatenation.
pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Assembles a matrix from a grid of blocks. Every block in a grid row must
/// share a row count and every block in a grid column a column count.
pub fn block(grid: &[&[&Matrix]]) -> Result<Matrix> {
    let row_heights: Vec<usize> = grid
        .iter()
        .map(|row| row.first().map_or(0, |b| b.nrows()))
        .collect();
    let col_widths: Vec<usize> = grid
        .first()
        .map(|row| row.iter().map(|b| b.ncols()).collect())
        .unwrap_or_default();
    for (i, row) in grid.iter().enumerate() {
        if row.len() != col_widths.len() {
            return Err(Error::Dimension(format!("block row {i} has wrong length")));
        }
        for (j, b) in row.iter().enumerate() {
            if b.nrows() != row_heights[i] || b.ncols() != col_widths[j] {
                return Err(Error::Dimension(format!(
                    "block ({i},{j}) is {}x{}, expected {}x{}",
                    b.nrows(),
                    b.ncols(),
                    row_heights[i],
                    col_widths[j]
                )));
            }
        }
    }
    let mut out = Matrix::zeros(row_heights.iter().sum(), col_widths.iter().sum());
    let mut r = 0;
    for (i, row) in grid.iter().enumerate() {
        let mut c = 0;
        for (j, b) in row.iter().enumerate() {
            out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
            c += col_widths[j];
        }
        r += row_heights[i];
    }
    Ok(out)
}

/// Solves `A^T X A - X = -Q` for a Schur-stable `A` by Smith's doubling
/// iteration.
pub fn discrete_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    ensure_square(a, "lyapunov A")?;
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        let step = ak.transpose() * &x * &ak;
        x += &step;
        if step.amax() <= 1e-16 * x.amax().max(f64::MIN_POSITIVE) {
            return Ok(symmetrize(&x));
        }
        ak = &ak * &ak;
    }
    let residual = (a.transpose() * &x * a - &x + q).amax();
    if residual.is_finite() && residual <= 1e-8 * x.amax() {
        Ok(symmetrize(&x))
    } else {
        Err(Error::numeric("doubling iteration for the Lyapunov equation stalled", residual))
    }
}

/// Orthonormal basis of the reachable subspace of `(A, B)`, built by
/// Krylov iteration with full reorthogonalization. Directions whose
/// residual falls below `rel_tol` times the scale of `A` are dropped.
pub fn reachable_basis(a: &Matrix, b: &Matrix, rel_tol: f64) -> Matrix {
    let n = a.nrows();
    let scale = a.norm().max(1.0);
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut pending: std::collections::VecDeque<nalgebra::DVector<f64>> = b
        .column_iter()
        .filter_map(|c| {
            let norm = c.norm();
            (norm > 0.0).then(|| c.into_owned() / norm)
        })
        .collect();
    while let Some(mut v) = pending.pop_front() {
        if basis.len() == n {
            break;
        }
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm <= rel_tol * scale {
            continue;
        }
        v /= norm;
        pending.push_back(a * &v);
        basis.push(v);
    }
    if basis.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&basis)
    }
}

/// Coordinates in which the reachability Gramian of a Schur-stable `(A, B)`
/// is the identity: `T = V S^{1/2}` over the Gramian's eigenpairs `(S, V)`,
/// dropping eigenvalues below `rel_tol` times the largest. Returns `T` and
/// its left inverse `S^{-1/2} V'`.
pub fn reachable_coordinates(a: &Matrix, b: &Matrix, rel_tol: f64) -> Result<(Matrix, Matrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Matrix::zeros(0, 0), Matrix::zeros(0, 0)));
    }
    let gram = discrete_lyapunov(&a.transpose(), &(b * b.transpose()))?;
    let eig = nalgebra::linalg::SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > rel_tol * top)
        .collect();
    let mut t = Matrix::zeros(n, keep.len());
    let mut t_inv = Matrix::zeros(keep.len(), n);
    for (k, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        let v = eig.eigenvectors.column(i);
        t.set_column(k, &(v * s));
        t_inv.set_row(k, &(v.transpose() / s));
    }
    Ok((t, t_inv))
}
