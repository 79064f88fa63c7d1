//! Fast-sample/hold approximation of the sampled-data error system, kept in
//! a form that is affine in the FIR coefficients.
//!
//! The realization has state partition `[T1 | T2 | FIR]` where
//! `T1 = z^{-m} K_N F_N` (delay applied as `m` slow steps on the lifted
//! signal), `T2 = S_N F_N`, and the FIR block is the (possibly polyphase
//! lifted) shift register. Only the output map depends on the coefficients:
//!
//! ```text
//! A = [A1 0 0; 0 A2 0; 0 B~K C2 A~K]      B = [B1; B2; 0]
//! C(a) = [C1, -H~ D~K(a) C2, -H~ C~K(a)]  D(a) = D1
//! ```

use crate::error::{Error, Result};
use crate::fir::{self, FirFilter};
use crate::lifting::{self, lift};
use crate::numerics::{self, Matrix};
use crate::statespace::{Domain, Sign, StateSpace};

/// Sizes and parameters behind an [`AffineErrorSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorLayout {
    /// Slow sample period `h`.
    pub period: f64,
    /// Delay steps per target term (one entry unless built from several terms).
    pub delays: Vec<usize>,
    pub upsampling: usize,
    pub target_states: usize,
    pub characteristic_states: usize,
    pub filter_states: usize,
}

/// `E(a) = [A B; C0 + sum a_k C_k, D0 + sum a_k D_k]`.
#[derive(Debug, Clone)]
pub struct AffineErrorSystem {
    a: Matrix,
    b: Matrix,
    c0: Matrix,
    c_lin: Vec<Matrix>,
    d0: Matrix,
    d_lin: Vec<Matrix>,
    factor: usize,
    layout: ErrorLayout,
}

impl AffineErrorSystem {
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c0(&self) -> &Matrix {
        &self.c0
    }
    pub fn c_lin(&self) -> &[Matrix] {
        &self.c_lin
    }
    pub fn d0(&self) -> &Matrix {
        &self.d0
    }
    pub fn d_lin(&self) -> &[Matrix] {
        &self.d_lin
    }
    pub fn taps(&self) -> usize {
        self.c_lin.len()
    }
    pub fn factor(&self) -> usize {
        self.factor
    }
    pub fn layout(&self) -> &ErrorLayout {
        &self.layout
    }
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c0.nrows()
    }

    fn check_coeffs(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.taps() {
            return Err(Error::Dimension(format!(
                "expected {} coefficients, got {}",
                self.taps(),
                a.len()
            )));
        }
        Ok(())
    }

    pub fn c_at(&self, a: &[f64]) -> Result<Matrix> {
        self.check_coeffs(a)?;
        Ok(self
            .c_lin
            .iter()
            .zip(a)
            .fold(self.c0.clone(), |acc, (ck, ak)| acc + ck * *ak))
    }

    pub fn d_at(&self, a: &[f64]) -> Result<Matrix> {
        self.check_coeffs(a)?;
        Ok(self
            .d_lin
            .iter()
            .zip(a)
            .fold(self.d0.clone(), |acc, (dk, ak)| acc + dk * *ak))
    }

    /// The error system for a fixed coefficient vector.
    pub fn realize(&self, a: &[f64]) -> Result<StateSpace> {
        StateSpace::new(
            self.a.clone(),
            self.b.clone(),
            self.c_at(a)?,
            self.d_at(a)?,
            Domain::Discrete { period: self.layout.period },
        )
    }
}

/// Rejects a target that is not a stable, continuous-time SISO system.
pub fn validate_target(g: &StateSpace, name: &str) -> Result<()> {
    if g.is_discrete() {
        return Err(Error::validation(name, "must be a continuous-time system"));
    }
    if g.inputs() != 1 || g.outputs() != 1 {
        return Err(Error::validation(name, "must be single-input single-output"));
    }
    if !g.is_stable()? {
        return Err(Error::validation(name, "is not stable"));
    }
    Ok(())
}

/// Rejects an analog characteristic that is not stable and strictly proper.
pub fn validate_characteristic(f: &StateSpace) -> Result<()> {
    validate_target(f, "characteristic")?;
    if !f.is_strictly_proper() {
        return Err(Error::validation("characteristic", "must be strictly proper"));
    }
    Ok(())
}

fn validate_rates(h: f64, taps: usize, upsampling: usize, factor: usize) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("sampling period must be positive, got {h}")));
    }
    if taps < 1 {
        return Err(Error::Parameter("FIR length must be at least 1".into()));
    }
    if factor < 1 {
        return Err(Error::Parameter("lifting factor must be at least 1".into()));
    }
    if upsampling < 1 || factor % upsampling != 0 {
        return Err(Error::Parameter(format!(
            "upsampling ratio {upsampling} must divide the lifting factor {factor}"
        )));
    }
    Ok(())
}

/// `T1 = sum_i z^{-m_i} K_{i,N} F_N` and `T2 = S_N F_N`.
fn fast_blocks(
    terms: &[(usize, &StateSpace)],
    characteristic: &StateSpace,
    h: f64,
    factor: usize,
) -> Result<(StateSpace, StateSpace)> {
    let fast = h / factor as f64;
    let f_n = lift(&characteristic.zoh_discretize(fast)?, factor)?.into_inner();
    let t2 = f_n.premultiply(&lifting::make_sample_row(factor))?;
    let mut t1: Option<StateSpace> = None;
    for (delay, target) in terms {
        let k_n = lift(&target.zoh_discretize(fast)?, factor)?.into_inner();
        let term = k_n.series(&f_n)?.delay_augment(*delay)?;
        t1 = Some(match t1 {
            None => term,
            Some(acc) => acc.add(&term, Sign::Plus)?,
        });
    }
    let t1 = t1.ok_or_else(|| Error::Parameter("at least one target term is required".into()))?;
    Ok((t1, t2))
}

/// Filter-side pieces: `(A~_K, B~_K)` and, per coefficient `k`, the maps
/// `(C~_K(e_k), D~_K(e_k))`.
struct FilterBlocks {
    a: Matrix,
    b: Matrix,
    per_tap: Vec<(Matrix, Matrix)>,
}

fn unit_row(m: usize, k: usize) -> (Matrix, f64) {
    // C_K = [a_{M-1}, ..., a_1], D_K = a_0
    let mut c = Matrix::zeros(1, m - 1);
    if k == 0 {
        (c, 1.0)
    } else {
        c[(0, m - 1 - k)] = 1.0;
        (c, 0.0)
    }
}

fn single_rate_filter(m: usize) -> FilterBlocks {
    let (a, b) = fir::shift_register(m);
    let per_tap = (0..m)
        .map(|k| {
            let (c, d) = unit_row(m, k);
            (c, Matrix::from_element(1, 1, d))
        })
        .collect();
    FilterBlocks { a, b, per_tap }
}

fn polyphase_filter(m: usize, l: usize) -> FilterBlocks {
    let (a_k, b_k) = fir::shift_register(m);
    let per_tap = (0..m)
        .map(|k| {
            let (c, d) = unit_row(m, k);
            lifting::polyphase_output_maps(&a_k, &b_k, &c, d, l)
        })
        .collect();
    FilterBlocks {
        a: numerics::matrix_power(&a_k, l),
        b: numerics::matrix_power(&a_k, l - 1) * &b_k,
        per_tap,
    }
}

fn assemble(
    t1: StateSpace,
    t2: StateSpace,
    filter: FilterBlocks,
    hold: &Matrix,
    factor: usize,
    layout: ErrorLayout,
) -> Result<AffineErrorSystem> {
    debug_assert!(t2.is_strictly_proper());
    let (n1, n2, nk) = (t1.order(), t2.order(), filter.a.nrows());
    let n = n1 + n2 + nk;
    let mut a = Matrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(t1.a());
    a.view_mut((n1, n1), (n2, n2)).copy_from(t2.a());
    a.view_mut((n1 + n2, n1), (nk, n2)).copy_from(&(&filter.b * t2.c()));
    a.view_mut((n1 + n2, n1 + n2), (nk, nk)).copy_from(&filter.a);

    let q = t1.inputs();
    let mut b = Matrix::zeros(n, q);
    b.view_mut((0, 0), (n1, q)).copy_from(t1.b());
    b.view_mut((n1, 0), (n2, q)).copy_from(t2.b());

    let p = t1.outputs();
    let mut c0 = Matrix::zeros(p, n);
    c0.view_mut((0, 0), (p, n1)).copy_from(t1.c());

    let mut c_lin = Vec::with_capacity(filter.per_tap.len());
    for (c_k, d_k) in &filter.per_tap {
        let mut ck = Matrix::zeros(p, n);
        ck.view_mut((0, n1), (p, n2)).copy_from(&(-(hold * d_k) * t2.c()));
        ck.view_mut((0, n1 + n2), (p, nk)).copy_from(&(-(hold * c_k)));
        c_lin.push(ck);
    }
    let d_lin = vec![Matrix::zeros(p, q); c_lin.len()];
    Ok(AffineErrorSystem {
        a,
        b,
        c0,
        c_lin,
        d0: t1.d().clone(),
        d_lin,
        factor,
        layout: ErrorLayout {
            target_states: n1,
            characteristic_states: n2,
            filter_states: nk,
            ..layout
        },
    })
}

/// Single-rate error system `(z^{-m} K_N - H_N K S_N) F_N`.
pub fn build_single_rate(
    target: &StateSpace,
    characteristic: &StateSpace,
    h: f64,
    delay: usize,
    taps: usize,
    factor: usize,
) -> Result<AffineErrorSystem> {
    validate_target(target, "target")?;
    validate_characteristic(characteristic)?;
    validate_rates(h, taps, 1, factor)?;
    let (t1, t2) = fast_blocks(&[(delay, target)], characteristic, h, factor)?;
    let hold = lifting::make_hold_vector(factor);
    assemble(t1, t2, single_rate_filter(taps), &hold, factor, layout(h, vec![delay], 1))
}

/// Multi-rate error system `(z^{-m} K_N - H~_N K~ S_N) F_N` with the filter
/// running `upsampling` times faster than the sampler.
pub fn build_multi_rate(
    target: &StateSpace,
    characteristic: &StateSpace,
    h: f64,
    delay: usize,
    taps: usize,
    upsampling: usize,
    factor: usize,
) -> Result<AffineErrorSystem> {
    build_multi_delay(&[(delay, target.clone())], characteristic, h, taps, upsampling, factor)
}

/// Multi-rate error system whose target is `sum_i e^{-m_i h s} G_i(s)`.
pub fn build_multi_delay(
    terms: &[(usize, StateSpace)],
    characteristic: &StateSpace,
    h: f64,
    taps: usize,
    upsampling: usize,
    factor: usize,
) -> Result<AffineErrorSystem> {
    for (i, (_, g)) in terms.iter().enumerate() {
        let name = if terms.len() == 1 { "target".to_string() } else { format!("target term {i}") };
        validate_target(g, &name)?;
    }
    validate_characteristic(characteristic)?;
    validate_rates(h, taps, upsampling, factor)?;
    let refs: Vec<(usize, &StateSpace)> = terms.iter().map(|(m, g)| (*m, g)).collect();
    let (t1, t2) = fast_blocks(&refs, characteristic, h, factor)?;
    let hold = lifting::make_multirate_hold(factor, upsampling)?;
    let delays = terms.iter().map(|(m, _)| *m).collect();
    assemble(
        t1,
        t2,
        polyphase_filter(taps, upsampling),
        &hold,
        factor,
        layout(h, delays, upsampling),
    )
}

fn layout(period: f64, delays: Vec<usize>, upsampling: usize) -> ErrorLayout {
    ErrorLayout {
        period,
        delays,
        upsampling,
        target_states: 0,
        characteristic_states: 0,
        filter_states: 0,
    }
}

/// Convenience for evaluating a designed filter against its error system.
pub fn realize_with_filter(sys: &AffineErrorSystem, k: &FirFilter) -> Result<StateSpace> {
    sys.realize(k.coeffs())
}
