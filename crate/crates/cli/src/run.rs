//! The subcommands, separated from argument parsing so tests can drive them.

use std::path::{Path, PathBuf};

use sdfir::numerics::Complex;

use sdfir::hinf::{self, FrequencySampler};
use sdfir::synth::VERIFY_TOL;
use sdfir::{AffineErrorSystem, DesignResult, DesignSpec, FirFilter, StateSpace};

use crate::config::{DesignConfig, IirConfig};
use crate::error::CliError;
use crate::output::{csv, db, phase_deg, sci, theta_grid};

/// Truncates the impulse response of a stable discrete SISO system to `taps`.
pub fn truncate(sys: &StateSpace, taps: usize) -> Result<FirFilter, CliError> {
    let period = sys
        .sample_period()
        .ok_or_else(|| CliError::Stability("truncation needs a discrete-time system".into()))?;
    if taps < 1 {
        return Err(CliError::Config("--taps must be at least 1".into()));
    }
    if sys.inputs() != 1 || sys.outputs() != 1 {
        return Err(CliError::Config("truncation needs a single-input single-output system".into()));
    }
    if !sys.is_stable()? {
        return Err(CliError::Stability("`baseline` rejected: is not stable".into()));
    }
    Ok(FirFilter::new(sys.impulse_response(taps)?, period)?)
}

/// Step-invariant discretization of the target at the tap period, preceded
/// by a hold over the `L` fast steps and delayed by `mL` taps, truncated to
/// `M` taps.
pub fn builtin_baseline(spec: &DesignSpec) -> Result<FirFilter, CliError> {
    sdfir::error_system::validate_target(&spec.target, "target")?;
    let l = spec.upsampling;
    let kd = spec.target.zoh_discretize(spec.tap_period())?;
    let imp = kd.impulse_response(spec.taps)?;
    let shift = spec.delay * l;
    let coeffs = (0..spec.taps)
        .map(|k| {
            (0..l)
                .filter_map(|j| k.checked_sub(shift + j))
                .map(|i| imp[i])
                .sum()
        })
        .collect();
    Ok(FirFilter::new(coeffs, spec.tap_period())?)
}

#[derive(Debug, Clone)]
pub struct Baseline {
    pub filter: FirFilter,
    /// Human-readable provenance written to `baseline.json`.
    pub source: String,
}

/// Baseline named by the config (`"builtin"` or a filter file relative to
/// `base_dir`), falling back to the built-in one when `fallback` is set.
pub fn resolve_baseline(
    config: &DesignConfig,
    spec: &DesignSpec,
    base_dir: &Path,
    fallback: bool,
) -> Result<Option<Baseline>, CliError> {
    match config.baseline.as_deref() {
        None if !fallback => Ok(None),
        None | Some("builtin") => Ok(Some(Baseline {
            filter: builtin_baseline(spec)?,
            source: "builtin: step-invariant discretization of the target, delayed and truncated".into(),
        })),
        Some(path) => {
            let path = base_dir.join(path);
            let iir = IirConfig::load(&path)?;
            let sys = iir.to_state_space_with_default(spec.tap_period())?;
            let period = sys.sample_period().unwrap_or(spec.tap_period());
            if (period - spec.tap_period()).abs() > 1e-12 * spec.tap_period() {
                return Err(CliError::Config(format!(
                    "baseline period {period} differs from the tap period {}",
                    spec.tap_period()
                )));
            }
            Ok(Some(Baseline {
                filter: truncate(&sys, spec.taps)?,
                source: format!("file: {}, truncated", path.display()),
            }))
        }
    }
}

/// Everything `design` writes, held in memory until the run succeeds.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub result: DesignResult,
    pub verified_norm: f64,
    pub baseline: Option<(Baseline, f64)>,
    pub files: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub gap_tol: Option<f64>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<DesignConfig, CliError> {
    let mut config = DesignConfig::load(path)?;
    if let Some(g) = overrides.grid {
        config.grid_points = g;
    }
    if let Some(t) = overrides.gap_tol {
        config.solver.gap_tol = t;
    }
    if let Some(o) = &overrides.out {
        config.output_dir = o.clone();
    }
    Ok(config)
}

fn norm_of(sys: &AffineErrorSystem, filter: &FirFilter, grid: usize) -> Result<f64, CliError> {
    Ok(hinf::hinf_norm_with_grid(&sys.realize(filter.coeffs())?, VERIFY_TOL, grid)?.value)
}

fn error_gain_rows(sys: &AffineErrorSystem, filter: &FirFilter, thetas: &[f64]) -> Result<Vec<Vec<f64>>, CliError> {
    let sampler = FrequencySampler::new(&sys.realize(filter.coeffs())?);
    thetas
        .iter()
        .map(|&t| Ok(vec![t, db(sampler.gain(t)?)]))
        .collect()
}

/// Filter response at the analog frequency `theta / h`.
fn filter_rows(filter: &FirFilter, upsampling: usize, thetas: &[f64]) -> Vec<Vec<f64>> {
    thetas
        .iter()
        .map(|&t| {
            let k = filter.response(t / upsampling as f64);
            vec![t, db(k.norm()), phase_deg(k.re, k.im)]
        })
        .collect()
}

fn impulse_rows(filter: &FirFilter) -> Vec<Vec<f64>> {
    filter
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, a)| vec![k as f64, *a])
        .collect()
}

pub fn design(config: &DesignConfig, base_dir: &Path) -> Result<DesignReport, CliError> {
    let spec = config.design_spec()?;
    let sys = spec.error_system()?;
    let result = sdfir::synth::design_for_system(&sys, spec.tap_period(), &spec.solver)?;
    let verified_norm = norm_of(&sys, &result.filter, config.norm_grid)?;
    let baseline = resolve_baseline(config, &spec, base_dir, false)?;
    let thetas = theta_grid(config.grid_points);
    let l = spec.upsampling;

    let mut files = Vec::new();
    let header = [
        format!("taps: {}", result.filter.taps()),
        format!("tap_period: {}", result.filter.tap_period()),
        format!("gamma: {}", sci(result.gamma)),
    ];
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    files.push(("coefficients.txt".into(), result.filter.to_coefficient_file(&header)));
    let summary = serde_json::json!({
        "gamma": result.gamma,
        "verified_norm": verified_norm,
        "iterations": result.diagnostics.iterations,
    });
    files.push(("gamma.json".into(), format!("{:#}\n", summary)));
    files.push((
        "filter_response.csv".into(),
        csv(&["theta", "magnitude_db", "phase_deg"], &filter_rows(&result.filter, l, &thetas)),
    ));
    files.push((
        "error_gain.csv".into(),
        csv(&["theta", "gain_db"], &error_gain_rows(&sys, &result.filter, &thetas)?),
    ));
    files.push(("impulse.csv".into(), csv(&["k", "coefficient"], &impulse_rows(&result.filter))));
    files.push(("analog_response.csv".into(), analog_csv(&spec, &thetas)?));

    let baseline = match baseline {
        Some(b) => {
            let norm = norm_of(&sys, &b.filter, config.norm_grid)?;
            files.push((
                "filter_response_baseline.csv".into(),
                csv(&["theta", "magnitude_db", "phase_deg"], &filter_rows(&b.filter, l, &thetas)),
            ));
            files.push((
                "error_gain_baseline.csv".into(),
                csv(&["theta", "gain_db"], &error_gain_rows(&sys, &b.filter, &thetas)?),
            ));
            files.push(("impulse_baseline.csv".into(), csv(&["k", "coefficient"], &impulse_rows(&b.filter))));
            let meta = serde_json::json!({
                "source": b.source,
                "taps": b.filter.taps(),
                "error_norm": norm,
            });
            files.push(("baseline.json".into(), format!("{:#}\n", meta)));
            Some((b, norm))
        }
        None => None,
    };
    Ok(DesignReport { result, verified_norm, baseline, files })
}

/// Target response including the allowed delay, at `omega = theta / h`.
fn analog_csv(spec: &DesignSpec, thetas: &[f64]) -> Result<String, CliError> {
    let delay = spec.delay as f64 * spec.h;
    let rows = thetas
        .iter()
        .map(|&t| {
            let w = t / spec.h;
            let g = spec.target.freq_response(Complex::new(0.0, w))?[(0, 0)] * Complex::from_polar(1.0, -w * delay);
            Ok(vec![t, w, db(g.norm()), phase_deg(g.re, g.im)])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(csv(&["theta", "omega", "magnitude_db", "phase_deg"], &rows))
}

/// Writes all files into `dir`, creating it if needed.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Error gain of the designed filter and of the baseline on the config grid.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub designed_norm: f64,
    pub baseline_norm: f64,
    pub baseline_source: String,
    pub csv: String,
}

pub fn compare(config: &DesignConfig, base_dir: &Path) -> Result<Comparison, CliError> {
    let spec = config.design_spec()?;
    let sys = spec.error_system()?;
    let result = sdfir::synth::design_for_system(&sys, spec.tap_period(), &spec.solver)?;
    let baseline = resolve_baseline(config, &spec, base_dir, true)?.expect("fallback requested");
    let thetas = theta_grid(config.grid_points);
    let designed = error_gain_rows(&sys, &result.filter, &thetas)?;
    let base = error_gain_rows(&sys, &baseline.filter, &thetas)?;
    let rows: Vec<Vec<f64>> = designed.iter().zip(&base).map(|(d, b)| vec![d[0], d[1], b[1]]).collect();
    Ok(Comparison {
        designed_norm: norm_of(&sys, &result.filter, config.norm_grid)?,
        baseline_norm: norm_of(&sys, &baseline.filter, config.norm_grid)?,
        baseline_source: baseline.source,
        csv: csv(&["theta", "designed_db", "baseline_db"], &rows),
    })
}
