//! Real polynomials in descending powers.

/// Product of two polynomials.
pub fn mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Product of all factors; the empty product is `[1]`.
pub fn product(factors: &[Vec<f64>]) -> Vec<f64> {
    factors.iter().fold(vec![1.0], |acc, f| mul(&acc, f))
}

/// Horner evaluation at a complex point.
pub fn eval(p: &[f64], x: nalgebra::Complex<f64>) -> nalgebra::Complex<f64> {
    p.iter().fold(nalgebra::Complex::new(0.0, 0.0), |acc, c| acc * x + c)
}
