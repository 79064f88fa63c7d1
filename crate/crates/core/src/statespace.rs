//! Linear time-invariant systems in state-space form and their
//! interconnection algebra.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::numerics::{self, CMatrix, Matrix};

/// Margin used by the stability predicates: discrete systems need a spectral
/// radius below `1 - STABILITY_MARGIN`, continuous ones a spectral abscissa
/// below `-STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Time domain of a system. Discrete systems carry their sample period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Continuous,
    Discrete { period: f64 },
}

impl Domain {
    pub fn period(&self) -> Option<f64> {
        match self {
            Domain::Continuous => None,
            Domain::Discrete { period } => Some(*period),
        }
    }

    fn same_as(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Continuous, Domain::Continuous) => true,
            (Domain::Discrete { period: a }, Domain::Discrete { period: b }) => {
                (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
            }
            _ => false,
        }
    }
}

/// Sign of the second operand in [`StateSpace::add`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// A realization `(A, B, C, D)`. Zero states are allowed (static gain).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
    domain: Domain,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix, domain: Domain) -> Result<Self> {
        numerics::ensure_square(&a, "A")?;
        let n = a.nrows();
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, A is {n}x{n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, A is {n}x{n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            numerics::ensure_finite(m, name)?;
        }
        if let Domain::Discrete { period } = domain {
            if !(period > 0.0 && period.is_finite()) {
                return Err(Error::Parameter(format!("sample period must be positive, got {period}")));
            }
        }
        Ok(StateSpace { a, b, c, d, domain })
    }

    /// SISO controllable canonical form of `num / den`, coefficients in
    /// descending powers. Leading zeros are ignored; the ratio must be proper.
    pub fn from_polynomials(num: &[f64], den: &[f64], domain: Domain) -> Result<Self> {
        let strip = |p: &[f64]| -> Vec<f64> { p.iter().copied().skip_while(|v| *v == 0.0).collect() };
        let (num, den) = (strip(num), strip(den));
        if den.is_empty() {
            return Err(Error::Input("denominator is identically zero".into()));
        }
        if num.iter().chain(&den).any(|v| !v.is_finite()) {
            return Err(Error::Input("polynomial coefficients must be finite".into()));
        }
        let n = den.len() - 1;
        if num.len() > den.len() {
            return Err(Error::Input(format!(
                "improper transfer function: numerator degree {} exceeds denominator degree {n}",
                num.len() - 1
            )));
        }
        let lead = den[0];
        let a_coef: Vec<f64> = den[1..].iter().map(|v| v / lead).collect();
        let mut b_coef = vec![0.0; n + 1 - num.len()];
        b_coef.extend(num.iter().map(|v| v / lead));
        let d0 = b_coef[0];
        let mut a = Matrix::zeros(n, n);
        for j in 0..n {
            a[(0, j)] = -a_coef[j];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let mut b = Matrix::zeros(n, 1);
        if n > 0 {
            b[(0, 0)] = 1.0;
        }
        let c = Matrix::from_fn(1, n, |_, j| b_coef[j + 1] - d0 * a_coef[j]);
        StateSpace::new(a, b, c, Matrix::from_element(1, 1, d0), domain)
    }

    /// A memoryless system `y = D u`.
    pub fn gain(d: Matrix, domain: Domain) -> Result<Self> {
        let (p, q) = d.shape();
        StateSpace::new(Matrix::zeros(0, 0), Matrix::zeros(0, q), Matrix::zeros(p, 0), d, domain)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn d(&self) -> &Matrix {
        &self.d
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn is_discrete(&self) -> bool {
        matches!(self.domain, Domain::Discrete { .. })
    }
    pub fn sample_period(&self) -> Option<f64> {
        self.domain.period()
    }

    pub fn is_stable(&self) -> Result<bool> {
        match self.domain {
            Domain::Continuous => Ok(numerics::spectral_abscissa(&self.a)? < -STABILITY_MARGIN),
            Domain::Discrete { .. } => {
                Ok(numerics::spectral_radius(&self.a)? < 1.0 - STABILITY_MARGIN)
            }
        }
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|v| *v == 0.0)
    }

    fn check_compatible(&self, other: &StateSpace) -> Result<()> {
        if !self.domain.same_as(&other.domain) {
            return Err(Error::Interconnection(format!(
                "domains differ: {:?} vs {:?}",
                self.domain, other.domain
            )));
        }
        Ok(())
    }

    /// `self ± other` (parallel connection).
    pub fn add(&self, other: &StateSpace, sign: Sign) -> Result<StateSpace> {
        self.check_compatible(other)?;
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(Error::Interconnection(format!(
                "cannot add {}x{} and {}x{} systems",
                self.outputs(),
                self.inputs(),
                other.outputs(),
                other.inputs()
            )));
        }
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let a = numerics::block_diag(&[&self.a, &other.a]);
        let b2 = &other.b * s;
        let b = numerics::block(&[&[&self.b], &[&b2]])?;
        let c = numerics::block(&[&[&self.c, &other.c]])?;
        let d = &self.d + &other.d * s;
        StateSpace::new(a, b, c, d, self.domain)
    }

    /// Cascade `self * inner`: `inner` feeds `self`.
    pub fn series(&self, inner: &StateSpace) -> Result<StateSpace> {
        self.check_compatible(inner)?;
        if self.inputs() != inner.outputs() {
            return Err(Error::Interconnection(format!(
                "outer system takes {} inputs but inner produces {} outputs",
                self.inputs(),
                inner.outputs()
            )));
        }
        let (n1, n2) = (self.order(), inner.order());
        let zero = Matrix::zeros(n2, n1);
        let b1c2 = &self.b * &inner.c;
        let a = numerics::block(&[&[&inner.a, &zero], &[&b1c2, &self.a]])?;
        let b1d2 = &self.b * &inner.d;
        let b = numerics::block(&[&[&inner.b], &[&b1d2]])?;
        let d1c2 = &self.d * &inner.c;
        let c = numerics::block(&[&[&d1c2, &self.c]])?;
        let d = &self.d * &inner.d;
        StateSpace::new(a, b, c, d, self.domain)
    }

    /// `K * self` for a static matrix `K`.
    pub fn premultiply(&self, k: &Matrix) -> Result<StateSpace> {
        self.gain_like(k.clone())?.series(self)
    }

    /// `self * K` for a static matrix `K`.
    pub fn postmultiply(&self, k: &Matrix) -> Result<StateSpace> {
        self.series(&self.gain_like(k.clone())?)
    }

    /// `c * self`.
    pub fn scale(&self, c: f64) -> StateSpace {
        StateSpace {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * c,
            d: &self.d * c,
            domain: self.domain,
        }
    }

    fn gain_like(&self, d: Matrix) -> Result<StateSpace> {
        StateSpace::gain(d, self.domain)
    }

    /// Zero-order-hold discretization. One exponential of the augmented
    /// matrix `[[A, B], [0, 0]] * period` yields both `e^{A period}` and
    /// `int_0^period e^{A t} dt B`.
    pub fn zoh_discretize(&self, period: f64) -> Result<StateSpace> {
        if self.is_discrete() {
            return Err(Error::Domain("zero-order hold needs a continuous-time system".into()));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Parameter(format!("period must be positive, got {period}")));
        }
        let (n, q) = (self.order(), self.inputs());
        let mut aug = Matrix::zeros(n + q, n + q);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * period));
        aug.view_mut((0, n), (n, q)).copy_from(&(&self.b * period));
        let e = numerics::expm(&aug)?;
        let ad = e.view((0, 0), (n, n)).into_owned();
        let bd = e.view((0, n), (n, q)).into_owned();
        StateSpace::new(ad, bd, self.c.clone(), self.d.clone(), Domain::Discrete { period })
    }

    /// `C (point I - A)^{-1} B + D`.
    pub fn freq_response(&self, point: Complex<f64>) -> Result<CMatrix> {
        let n = self.order();
        let d = self.d.map(|v| Complex::new(v, 0.0));
        if n == 0 {
            return Ok(d);
        }
        let mut m = self.a.map(|v| Complex::new(-v, 0.0));
        for i in 0..n {
            m[(i, i)] += point;
        }
        let b = self.b.map(|v| Complex::new(v, 0.0));
        let lu = m.lu();
        let u_diag: Vec<f64> = (0..n).map(|i| lu.u()[(i, i)].norm()).collect();
        let umax = u_diag.iter().copied().fold(0.0, f64::max);
        let umin = u_diag.iter().copied().fold(f64::INFINITY, f64::min);
        if umin <= 1e-14 * umax.max(1.0) {
            return Err(Error::PoleEvaluation(format!("{point} is (numerically) a pole")));
        }
        let x = lu
            .solve(&b)
            .ok_or_else(|| Error::PoleEvaluation(format!("{point} is a pole")))?;
        let c = self.c.map(|v| Complex::new(v, 0.0));
        Ok(c * x + d)
    }

    /// Realization of `z^{-d} G`: the output passes through a `d`-stage shift
    /// register (`d * outputs` extra states).
    pub fn delay_augment(&self, d: usize) -> Result<StateSpace> {
        if !self.is_discrete() {
            return Err(Error::Domain("delay augmentation needs a discrete-time system".into()));
        }
        if d == 0 {
            return Ok(self.clone());
        }
        let (n, p, q) = (self.order(), self.outputs(), self.inputs());
        let total = n + d * p;
        let mut a = Matrix::zeros(total, total);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a);
        a.view_mut((n, 0), (p, n)).copy_from(&self.c);
        for stage in 1..d {
            let r = n + stage * p;
            a.view_mut((r, r - p), (p, p)).fill_with_identity();
        }
        let mut b = Matrix::zeros(total, q);
        b.view_mut((0, 0), (n, q)).copy_from(&self.b);
        b.view_mut((n, 0), (p, q)).copy_from(&self.d);
        let mut c = Matrix::zeros(p, total);
        c.view_mut((0, total - p), (p, p)).fill_with_identity();
        StateSpace::new(a, b, c, Matrix::zeros(p, q), self.domain)
    }

    /// Response of a discrete system to an input sequence from zero state.
    /// `inputs[k]` is the input vector at step `k`.
    pub fn simulate(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let mut x = nalgebra::DVector::zeros(self.order());
        let mut out = Vec::with_capacity(inputs.len());
        for (k, u) in inputs.iter().enumerate() {
            if u.len() != self.inputs() {
                return Err(Error::Dimension(format!(
                    "input {k} has length {}, expected {}",
                    u.len(),
                    self.inputs()
                )));
            }
            let u = nalgebra::DVector::from_column_slice(u);
            let y = &self.c * &x + &self.d * &u;
            x = &self.a * &x + &self.b * &u;
            out.push(y.iter().copied().collect());
        }
        Ok(out)
    }

    /// First `len` samples of the impulse response of a discrete SISO system:
    /// `D, CB, CAB, ...`.
    pub fn impulse_response(&self, len: usize) -> Result<Vec<f64>> {
        if self.inputs() != 1 || self.outputs() != 1 {
            return Err(Error::Dimension("impulse response needs a SISO system".into()));
        }
        let mut taps = Vec::with_capacity(len);
        if len == 0 {
            return Ok(taps);
        }
        taps.push(self.d[(0, 0)]);
        let mut v = self.b.clone();
        for _ in 1..len {
            taps.push((&self.c * &v)[(0, 0)]);
            v = &self.a * v;
        }
        Ok(taps)
    }
}
