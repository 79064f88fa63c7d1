//! JSON design configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use sdfir::numerics::{self, Matrix};
use sdfir::poly;
use sdfir::{Domain, SolverOptions, StateSpace};

use crate::error::CliError;

/// A linear system given as a transfer function or a realization.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SystemConfig {
    Polynomial {
        num: Vec<f64>,
        den: Vec<f64>,
    },
    Factored {
        gain: f64,
        num_factors: Vec<Vec<f64>>,
        den_factors: Vec<Vec<f64>>,
    },
    Realization {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
    },
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Config(format!("{what} has rows of different lengths")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    numerics::from_rows(r, c, &flat).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

impl SystemConfig {
    /// Builds the system; `name` labels errors.
    pub fn to_state_space(&self, domain: Domain, name: &str) -> Result<StateSpace, CliError> {
        let wrap = |e: sdfir::Error| CliError::Config(format!("{name}: {e}"));
        match self {
            SystemConfig::Polynomial { num, den } => {
                StateSpace::from_polynomials(num, den, domain).map_err(wrap)
            }
            SystemConfig::Factored { gain, num_factors, den_factors } => {
                let num: Vec<f64> = poly::product(num_factors).iter().map(|v| v * gain).collect();
                StateSpace::from_polynomials(&num, &poly::product(den_factors), domain).map_err(wrap)
            }
            SystemConfig::Realization { a, b, c, d } => {
                let n = a.len();
                let a = if n == 0 { Matrix::zeros(0, 0) } else { matrix(a, &format!("{name}.a"))? };
                let d = matrix(d, &format!("{name}.d"))?;
                let b = if n == 0 { Matrix::zeros(0, d.ncols()) } else { matrix(b, &format!("{name}.b"))? };
                let c = if n == 0 { Matrix::zeros(d.nrows(), 0) } else { matrix(c, &format!("{name}.c"))? };
                StateSpace::new(a, b, c, d, domain).map_err(wrap)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "defaults::gap_tol")]
    pub gap_tol: f64,
    #[serde(default = "defaults::max_newton")]
    pub max_newton: usize,
    #[serde(default = "defaults::barrier_mult")]
    pub barrier_mult: f64,
    #[serde(default = "defaults::epsilon_margin")]
    pub epsilon_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig {
            gap_tol: d.gap_tol,
            max_newton: d.max_newton,
            barrier_mult: d.barrier_mult,
            epsilon_margin: d.epsilon_margin,
        }
    }
}

impl From<SolverConfig> for SolverOptions {
    fn from(s: SolverConfig) -> Self {
        SolverOptions {
            gap_tol: s.gap_tol,
            max_newton: s.max_newton,
            barrier_mult: s.barrier_mult,
            epsilon_margin: s.epsilon_margin,
        }
    }
}

mod defaults {
    use sdfir::SolverOptions;

    pub fn gap_tol() -> f64 {
        SolverOptions::default().gap_tol
    }
    pub fn max_newton() -> usize {
        SolverOptions::default().max_newton
    }
    pub fn barrier_mult() -> f64 {
        SolverOptions::default().barrier_mult
    }
    pub fn epsilon_margin() -> f64 {
        SolverOptions::default().epsilon_margin
    }
    pub fn grid_points() -> usize {
        512
    }
    pub fn norm_grid() -> usize {
        sdfir::hinf::DEFAULT_GRID
    }
    pub fn output_dir() -> std::path::PathBuf {
        "out".into()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub target: SystemConfig,
    pub characteristic: SystemConfig,
    pub h: f64,
    pub m: usize,
    #[serde(rename = "L")]
    pub upsampling: usize,
    #[serde(rename = "M")]
    pub taps: usize,
    #[serde(rename = "N")]
    pub factor: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "defaults::grid_points")]
    pub grid_points: usize,
    #[serde(default = "defaults::norm_grid")]
    pub norm_grid: usize,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    /// `"builtin"` or a path to an IIR filter file.
    #[serde(default)]
    pub baseline: Option<String>,
}

impl DesignConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        DesignConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(CliError::Config(format!("h must be positive, got {}", self.h)));
        }
        if self.upsampling < 1 || self.taps < 1 || self.factor < 1 {
            return Err(CliError::Config("L, M and N must be at least 1".into()));
        }
        if self.factor % self.upsampling != 0 {
            return Err(CliError::Config(format!(
                "L = {} must divide N = {}",
                self.upsampling, self.factor
            )));
        }
        if self.grid_points < 2 {
            return Err(CliError::Config("grid_points must be at least 2".into()));
        }
        if self.norm_grid < 3 {
            return Err(CliError::Config("norm_grid must be at least 3".into()));
        }
        Ok(())
    }

    pub fn design_spec(&self) -> Result<sdfir::DesignSpec, CliError> {
        self.validate()?;
        let target = self.target.to_state_space(Domain::Continuous, "target")?;
        let characteristic = self.characteristic.to_state_space(Domain::Continuous, "characteristic")?;
        Ok(sdfir::DesignSpec {
            target,
            characteristic,
            h: self.h,
            delay: self.m,
            upsampling: self.upsampling,
            taps: self.taps,
            factor: self.factor,
            solver: self.solver.into(),
        })
    }
}

/// A discrete filter for truncation: a system plus its sample period.
// `deny_unknown_fields` does not combine with `flatten`; the untagged system
// still rejects stray keys.
#[derive(Debug, Clone, Deserialize)]
pub struct IirConfig {
    #[serde(flatten)]
    pub system: SystemConfig,
    /// Sample period; defaults to the caller's.
    #[serde(default)]
    pub period: Option<f64>,
}

impl IirConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_state_space_with_default(&self, period: f64) -> Result<StateSpace, CliError> {
        let period = self.period.unwrap_or(period);
        if !(period > 0.0 && period.is_finite()) {
            return Err(CliError::Config(format!("period must be positive, got {period}")));
        }
        self.system
            .to_state_space(Domain::Discrete { period }, "baseline")
    }
}
