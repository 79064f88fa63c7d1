use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdfir_cli::config::IirConfig;
use sdfir_cli::run::{self, Overrides};
use sdfir_cli::output::sci;
use sdfir_cli::CliError;

#[derive(Parser)]
#[command(name = "sdfir", version, about = "H-infinity optimal FIR discretization of analog filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a filter and write its artifacts.
    Design {
        config: PathBuf,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Frequency grid size of the CSV outputs.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long = "solver-gap-tol")]
        solver_gap_tol: Option<f64>,
    },
    /// Truncate the impulse response of a discrete IIR filter.
    Truncate {
        iir: PathBuf,
        #[arg(long)]
        taps: usize,
        /// Write the coefficient file here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the error gain of the designed filter and the baseline.
    Compare {
        config: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design { config, out, grid, solver_gap_tol } => {
            let overrides = Overrides { out, grid, gap_tol: solver_gap_tol };
            let cfg = run::load_config(&config, &overrides)?;
            let report = run::design(&cfg, &base_dir(&config))?;
            run::write_files(&cfg.output_dir, &report.files)?;
            println!("gamma {}", sci(report.result.gamma));
            println!("verified_norm {}", sci(report.verified_norm));
            println!("iterations {}", report.result.diagnostics.iterations);
            if let Some((b, norm)) = &report.baseline {
                println!("baseline_norm {} ({})", sci(*norm), b.source);
            }
            Ok(())
        }
        Command::Truncate { iir, taps, out } => {
            let sys = IirConfig::load(&iir)?.to_state_space_with_default(1.0)?;
            let filter = run::truncate(&sys, taps)?;
            emit(&filter.to_coefficient_file(&[]), out.as_deref())
        }
        Command::Compare { config, out } => {
            let cfg = run::load_config(&config, &Overrides::default())?;
            let c = run::compare(&cfg, &base_dir(&config))?;
            emit(&c.csv, out.as_deref())?;
            eprintln!(
                "peak error: designed {:.6e}, baseline {:.6e} ({})",
                c.designed_norm, c.baseline_norm, c.baseline_source
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
