//! `plcc`: simulate MC-ARFIMA pairs, estimate power-law (cross-)correlation
//! exponents from CSV files and run seeded Monte Carlo experiments.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 I/O error,
//! 4 estimation failure (partial results are still written).

mod analyze;
mod commands;
mod config;
mod data;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::analyze::{AnalyzeOptions, ScaleRange, DEFAULT_MIN_ROWS};
use crate::manifest::{Analysis, HRhoMethod};

#[derive(Parser)]
#[command(name = "plcc", version, about = "Power-law cross-correlation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a series pair from a config file and write it as CSV.
    Generate {
        config: PathBuf,
        out: PathBuf,
        /// Overrides the config seed and PLCC_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        length: Option<usize>,
    },
    /// Run one estimator on a CSV file and write a JSON result.
    Analyze {
        #[arg(value_enum)]
        analysis: Analysis,
        input: PathBuf,
        out: PathBuf,
        /// Log-spaced scale grid.
        #[arg(long, value_name = "MIN:MAX:COUNT")]
        scales: Option<ScaleRange>,
        /// Detrending polynomial order.
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Lowest Fourier frequencies used in spectral fits [default: floor(sqrt(T))].
        #[arg(long)]
        nfreqs: Option<usize>,
        /// Daniell smoothing width (odd, >= 3).
        #[arg(long, default_value_t = plcc::spectral::DEFAULT_BANDWIDTH)]
        bandwidth: usize,
        /// Half-width of the standard regime band.
        #[arg(long, default_value_t = plcc::coherency::DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MIN_ROWS)]
        min_rows: usize,
        /// Channel used by `hrho`.
        #[arg(long, value_enum, default_value_t = HRhoMethod::Freq)]
        method: HRhoMethod,
    },
    /// Run the Monte Carlo experiments of a config file.
    Mc {
        config: PathBuf,
        out_dir: PathBuf,
        /// Overrides every master seed, as does PLCC_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-run the invocation recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Output file, or output directory for mc manifests.
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            config,
            out,
            seed,
            length,
        } => commands::generate(&config, &out, seed, length),
        Command::Analyze {
            analysis,
            input,
            out,
            scales,
            order,
            nfreqs,
            bandwidth,
            tol,
            min_rows,
            method,
        } => {
            let opts = AnalyzeOptions {
                scales,
                order,
                n_freqs: nfreqs,
                bandwidth,
                tolerance: tol,
                min_rows,
                method,
            };
            commands::analyze(analysis, &input, &out, &opts)
        }
        Command::Mc {
            config,
            out_dir,
            seed,
            tol,
            threads,
        } => commands::mc(&config, &out_dir, seed, tol, threads),
        Command::Replay {
            manifest,
            out,
            threads,
        } => commands::replay(&manifest, &out, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
