//! Discrete-time lifting and the multirate hold/sample building blocks.

use crate::error::{Error, Result};
use crate::fir::FirFilter;
use crate::numerics::{self, Matrix};
use crate::statespace::{Domain, StateSpace};

/// A slow-rate system obtained by lifting a fast-rate one by `factor`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    inner: StateSpace,
    factor: usize,
    base_period: f64,
}

impl LiftedSystem {
    pub fn inner(&self) -> &StateSpace {
        &self.inner
    }
    pub fn into_inner(self) -> StateSpace {
        self.inner
    }
    pub fn factor(&self) -> usize {
        self.factor
    }
    /// Period of the unlifted (fast) system.
    pub fn base_period(&self) -> f64 {
        self.base_period
    }
}

/// Lifts a discrete system by `n`: `A^n`, `[A^{n-1}B, ..., B]`,
/// `[C; CA; ...; CA^{n-1}]` and the block lower-triangular Toeplitz
/// feedthrough with `D` on the diagonal.
pub fn lift(g: &StateSpace, n: usize) -> Result<LiftedSystem> {
    let base_period = g
        .sample_period()
        .ok_or_else(|| Error::Domain("lifting needs a discrete-time system".into()))?;
    if n < 1 {
        return Err(Error::Parameter("lifting factor must be at least 1".into()));
    }
    let (order, p, q) = (g.order(), g.outputs(), g.inputs());
    let a = g.a();

    // powers[k] = A^k for k = 0..=n
    let mut powers = Vec::with_capacity(n + 1);
    powers.push(Matrix::identity(order, order));
    for k in 1..=n {
        powers.push(&powers[k - 1] * a);
    }

    let mut lb = Matrix::zeros(order, q * n);
    for j in 0..n {
        lb.view_mut((0, j * q), (order, q))
            .copy_from(&(&powers[n - 1 - j] * g.b()));
    }
    let mut lc = Matrix::zeros(p * n, order);
    // markov[k] = C A^k B
    let mut markov = Vec::with_capacity(n);
    for i in 0..n {
        let cai = g.c() * &powers[i];
        markov.push(&cai * g.b());
        lc.view_mut((i * p, 0), (p, order)).copy_from(&cai);
    }
    let mut ld = Matrix::zeros(p * n, q * n);
    for i in 0..n {
        ld.view_mut((i * p, i * q), (p, q)).copy_from(g.d());
        for j in 0..i {
            ld.view_mut((i * p, j * q), (p, q))
                .copy_from(&markov[i - j - 1]);
        }
    }
    let inner = StateSpace::new(
        powers.swap_remove(n),
        lb,
        lc,
        ld,
        Domain::Discrete { period: base_period * n as f64 },
    )?;
    Ok(LiftedSystem { inner, factor: n, base_period })
}

/// `[1, ..., 1]^T` with `n` entries.
pub fn make_hold_vector(n: usize) -> Matrix {
    Matrix::from_element(n, 1, 1.0)
}

/// `[1, 0, ..., 0]` with `n` entries.
pub fn make_sample_row(n: usize) -> Matrix {
    let mut s = Matrix::zeros(1, n);
    if n > 0 {
        s[(0, 0)] = 1.0;
    }
    s
}

/// `blkdiag(1_p, ..., 1_p)` with `l` columns and `p = n / l`.
pub fn make_multirate_hold(n: usize, l: usize) -> Result<Matrix> {
    if l == 0 || n == 0 || n % l != 0 {
        return Err(Error::Parameter(format!(
            "upsampling ratio {l} must divide the lifting factor {n}"
        )));
    }
    let p = n / l;
    let mut h = Matrix::zeros(n, l);
    for j in 0..l {
        h.view_mut((j * p, j), (p, 1)).fill(1.0);
    }
    Ok(h)
}

/// Polyphase-lifted FIR `lift(K, l) [1, 0, ..., 0]^T`: `A_K^l`, `A_K^{l-1} B_K`,
/// `[C_K; C_K A_K; ...]`, `[D_K; C_K B_K; ...; C_K A_K^{l-2} B_K]`.
pub fn lift_fir_polyphase(k: &FirFilter, l: usize) -> Result<StateSpace> {
    if l < 1 {
        return Err(Error::Parameter("upsampling ratio must be at least 1".into()));
    }
    let (a_k, b_k) = crate::fir::shift_register(k.taps());
    let c_k = Matrix::from_row_slice(1, k.taps() - 1, &k.c_row());
    let (c, d) = polyphase_output_maps(&a_k, &b_k, &c_k, k.coeffs()[0], l);
    StateSpace::new(
        numerics::matrix_power(&a_k, l),
        numerics::matrix_power(&a_k, l - 1) * &b_k,
        c,
        d,
        Domain::Discrete { period: k.tap_period() * l as f64 },
    )
}

/// Stacked `(C~_K, D~_K)` of the polyphase-lifted filter.
pub(crate) fn polyphase_output_maps(
    a_k: &Matrix,
    b_k: &Matrix,
    c_k: &Matrix,
    d_k: f64,
    l: usize,
) -> (Matrix, Matrix) {
    let n = a_k.nrows();
    let mut c = Matrix::zeros(l, n);
    let mut d = Matrix::zeros(l, 1);
    d[(0, 0)] = d_k;
    let mut row = c_k.clone();
    for i in 0..l {
        c.view_mut((i, 0), (1, n)).copy_from(&row);
        if i + 1 < l {
            d[(i + 1, 0)] = if n == 0 { 0.0 } else { (&row * b_k)[(0, 0)] };
        }
        row = &row * a_k;
    }
    (c, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_lift() {
        let g = StateSpace::new(
            Matrix::from_element(1, 1, 0.5),
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, 2.0),
            Matrix::from_element(1, 1, 0.1),
            Domain::Discrete { period: 0.5 },
        )
        .unwrap();
        let lg = lift(&g, 1).unwrap();
        assert_eq!(lg.inner(), &g);
        assert!(lift(&g, 0).is_err());
    }

    #[test]
    fn lift_by_two_blocks() {
        let (a, b, c, d) = (0.5, 1.5, 2.0, 0.1);
        let g = StateSpace::new(
            Matrix::from_element(1, 1, a),
            Matrix::from_element(1, 1, b),
            Matrix::from_element(1, 1, c),
            Matrix::from_element(1, 1, d),
            Domain::Discrete { period: 0.5 },
        )
        .unwrap();
        let lg = lift(&g, 2).unwrap();
        let s = lg.inner();
        assert_eq!(s.d(), &Matrix::from_row_slice(2, 2, &[d, 0.0, c * b, d]));
        assert_eq!(s.c(), &Matrix::from_row_slice(2, 1, &[c, c * a]));
        assert_eq!(s.b(), &Matrix::from_row_slice(1, 2, &[a * b, b]));
        assert_eq!(s.a()[(0, 0)], a * a);
        assert_eq!(s.sample_period(), Some(1.0));
        assert_eq!(lg.base_period(), 0.5);
    }

    #[test]
    fn hold_and_sample() {
        assert_eq!(make_hold_vector(1), Matrix::from_element(1, 1, 1.0));
        assert_eq!(make_hold_vector(3), Matrix::from_element(3, 1, 1.0));
        assert_eq!(make_hold_vector(6).iter().sum::<f64>(), 6.0);
        assert_eq!(make_sample_row(1), Matrix::from_element(1, 1, 1.0));
        assert_eq!(make_sample_row(4), Matrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]));
        for n in 1..8 {
            assert_eq!((make_sample_row(n) * make_hold_vector(n))[(0, 0)], 1.0);
        }
    }

    #[test]
    fn multirate_hold() {
        assert_eq!(
            make_multirate_hold(4, 2).unwrap(),
            Matrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0])
        );
        assert_eq!(make_multirate_hold(5, 1).unwrap(), make_hold_vector(5));
        let h = make_multirate_hold(6, 2).unwrap();
        assert_eq!(h.shape(), (6, 2));
        assert_eq!(h.column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(h.column(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(make_multirate_hold(6, 4).is_err());
    }

    #[test]
    fn polyphase_three_taps_by_two() {
        let k = FirFilter::new(vec![1.0, 2.0, 3.0], 0.5).unwrap();
        let s = lift_fir_polyphase(&k, 2).unwrap();
        assert_eq!(s.d(), &Matrix::from_row_slice(2, 1, &[1.0, 2.0]));
        // C_K = [a2, a1], C_K A_K = [0, a2]
        assert_eq!(s.c(), &Matrix::from_row_slice(2, 2, &[3.0, 2.0, 0.0, 3.0]));
        assert_eq!(s.sample_period(), Some(1.0));
        let single = lift_fir_polyphase(&k, 1).unwrap();
        assert_eq!(single, k.realize_ss());
    }
}
