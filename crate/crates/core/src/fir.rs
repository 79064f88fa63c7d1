//! FIR filters `K(z) = sum_k a_k z^{-k}` and their shift-register realization.

use std::fmt::Write as _;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::statespace::{Domain, StateSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    coeffs: Vec<f64>,
    tap_period: f64,
}

impl FirFilter {
    pub fn new(coeffs: Vec<f64>, tap_period: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Parameter("an FIR filter needs at least one tap".into()));
        }
        if let Some(v) = coeffs.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite filter coefficient {v}")));
        }
        if !(tap_period > 0.0 && tap_period.is_finite()) {
            return Err(Error::Parameter(format!("tap period must be positive, got {tap_period}")));
        }
        Ok(FirFilter { coeffs, tap_period })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn taps(&self) -> usize {
        self.coeffs.len()
    }

    pub fn tap_period(&self) -> f64 {
        self.tap_period
    }

    /// Shift-register realization: `A` is the `(M-1)x(M-1)` upper shift,
    /// `B` the last unit vector, `C = [a_{M-1}, ..., a_1]`, `D = a_0`.
    pub fn realize_ss(&self) -> StateSpace {
        let (a, b) = shift_register(self.taps());
        let c = Matrix::from_row_slice(1, self.taps() - 1, &self.c_row());
        let d = Matrix::from_element(1, 1, self.coeffs[0]);
        StateSpace::new(a, b, c, d, Domain::Discrete { period: self.tap_period })
            .expect("shift-register realization is well formed")
    }

    /// `[a_{M-1}, a_{M-2}, ..., a_1]`.
    pub(crate) fn c_row(&self) -> Vec<f64> {
        self.coeffs[1..].iter().rev().copied().collect()
    }

    /// `(a_0, ..., a_{M-1}, 0, ...)` truncated or zero-padded to `len`.
    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(0.0))
            .collect()
    }

    /// `K(e^{j theta})` by direct polynomial evaluation.
    pub fn response(&self, theta: f64) -> Complex<f64> {
        let zinv = Complex::from_polar(1.0, -theta);
        // Horner in z^{-1}
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(0.0, 0.0), |acc, a| acc * zinv + a)
    }

    /// Tapwise sum; the shorter filter is zero-padded.
    pub fn sum(filters: &[FirFilter]) -> Result<FirFilter> {
        let first = filters
            .first()
            .ok_or_else(|| Error::Parameter("cannot sum an empty list of filters".into()))?;
        let len = filters.iter().map(|f| f.taps()).max().unwrap_or(1);
        let mut coeffs = vec![0.0; len];
        for f in filters {
            if (f.tap_period - first.tap_period).abs() > 1e-12 * first.tap_period {
                return Err(Error::Parameter("filters on different tap grids".into()));
            }
            for (acc, a) in coeffs.iter_mut().zip(&f.coeffs) {
                *acc += a;
            }
        }
        FirFilter::new(coeffs, first.tap_period)
    }

    /// Coefficient file: optional `#` comment lines, then one coefficient per
    /// line in scientific notation with 17 significant digits.
    pub fn to_coefficient_file(&self, comments: &[&str]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        for a in &self.coeffs {
            let _ = writeln!(out, "{a:.16e}");
        }
        out
    }

    pub fn from_coefficient_file(text: &str, tap_period: f64) -> Result<FirFilter> {
        let mut coeffs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::Input(format!("line {}: cannot parse coefficient {line:?}", lineno + 1))
            })?;
            coeffs.push(v);
        }
        FirFilter::new(coeffs, tap_period)
    }
}

/// `(A_K, B_K)` of an `m`-tap filter.
pub(crate) fn shift_register(m: usize) -> (Matrix, Matrix) {
    let n = m - 1;
    let mut a = Matrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    let mut b = Matrix::zeros(n, 1);
    if n > 0 {
        b[(n - 1, 0)] = 1.0;
    }
    (a, b)
}
