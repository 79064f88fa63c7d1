//! FIR filter design by H-infinity optimal discretization of analog filters.
//!
//! The sampled-data error between an analog target and a sampler, FIR
//! filter and hold is approximated by a fast-sample/hold lifted discrete
//! system whose output map is affine in the filter coefficients. The
//! minimum H-infinity bound is then found with a bounded-real LMI solved by
//! a dense interior-point method.

pub mod error;
pub mod error_system;
pub mod fir;
pub mod hinf;
pub mod kyp;
pub mod lifting;
pub mod numerics;
pub mod poly;
pub mod sdp;
pub mod statespace;
pub mod synth;

pub use error::{Error, Result};
pub use error_system::AffineErrorSystem;
pub use fir::FirFilter;
pub use hinf::{hinf_norm, kyp_norm_bisect, NormMethod, NormResult};
pub use numerics::Matrix;
pub use sdp::{SolveStatus, SolverOptions};
pub use statespace::{Domain, Sign, StateSpace};
pub use synth::{design_fir, design_multi_delay, verify_bound, DesignResult, DesignSpec};
