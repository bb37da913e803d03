//! `rfi-mvue` command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | unexpected internal failure |
//! | 2 | malformed input file, config or arguments |
//! | 3 | covariance rejected by the solver (not positive definite) |
//! | 4 | dimension mismatch between inputs |
//! | 5 | I/O failure |

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rfi_mvue_core::io::{format_float, format_floats, parse_samples, parse_statistics};
use rfi_mvue_core::{
    baseline_estimate, run_sweep_with_workers, solve_min_variance_weights, weighted_sum_estimate,
    DetectionConfig, Diagnostics, Error, RfiStatistics, SampleSet,
};

use crate::config::{parse_config, resolve, OutputFormat, Overrides};

const SEED_ENV: &str = "RFI_MVUE_SEED";

#[derive(Parser)]
#[command(
    name = "rfi-mvue",
    version,
    about = "Minimum-variance unbiased soil power estimation under RFI"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Weighted,
    Baseline,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the minimum-variance weights for a statistics file.
    Weights {
        #[arg(long)]
        stats: PathBuf,
    },
    /// Estimate soil power from a sample file.
    Estimate {
        #[arg(long)]
        samples: PathBuf,
        /// Required for `--method weighted`; checked for shape otherwise.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Method,
        /// Detection threshold multiplier for the baseline.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Run the Monte Carlo sweep and write CSV/JSON and plot data.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Failure::new(5, format!("{}: {err}", path.display()))
    }

    fn with_context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotPositiveDefinite { .. } | Error::KktResidual { .. } => 3,
            Error::DimensionMismatch { .. } => 4,
            Error::Parse { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidSamples(_)
            | Error::AsymmetricCovariance { .. }
            | Error::NonpositiveDiagonal { .. }
            | Error::NonpositiveVariance { .. } => 2,
        };
        Failure::new(code, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn load_stats(path: &Path) -> Result<RfiStatistics, Failure> {
    parse_statistics(&read(path)?).map_err(|e| Failure::from(e).with_context(path))
}

fn load_samples(path: &Path) -> Result<SampleSet, Failure> {
    parse_samples(&read(path)?).map_err(|e| Failure::from(e).with_context(path))
}

fn cmd_weights(stats: &Path) -> Result<String, Failure> {
    let stats = load_stats(stats)?;
    let sol = solve_min_variance_weights(&stats)?;
    Ok(format!(
        "weights = {}\nlambda = {}\nmin_variance = {}\n",
        format_floats(sol.weights()),
        format_float(sol.multiplier()),
        format_float(sol.min_variance()),
    ))
}

fn cmd_estimate(
    samples: &Path,
    stats: Option<&Path>,
    method: Method,
    beta: f64,
) -> Result<String, Failure> {
    let samples = load_samples(samples)?;
    let stats = stats.map(load_stats).transpose()?;
    if let Some(s) = &stats {
        if s.dim() != samples.len() {
            return Err(Error::DimensionMismatch {
                what: "statistics vs samples",
                expected: samples.len(),
                found: s.dim(),
            }
            .into());
        }
    }
    let estimate = match method {
        Method::Weighted => {
            let stats =
                stats.ok_or_else(|| Failure::new(2, "--method weighted requires --stats"))?;
            let weights = solve_min_variance_weights(&stats)?;
            weighted_sum_estimate(&samples, &stats, &weights)?
        }
        Method::Baseline => baseline_estimate(&samples, &DetectionConfig::new(beta)?),
    };
    let mut out = String::new();
    match estimate.diagnostics {
        Diagnostics::WeightedSum {
            theoretical_variance,
        } => {
            out.push_str("method = weighted\n");
            out.push_str(&format!("estimate = {}\n", format_float(estimate.value)));
            out.push_str(&format!(
                "theoretical_variance = {}\n",
                format_float(theoretical_variance)
            ));
        }
        Diagnostics::BaselineAverage {
            retained,
            fallback,
            degenerate_spread,
        } => {
            out.push_str("method = baseline\n");
            out.push_str(&format!("estimate = {}\n", format_float(estimate.value)));
            out.push_str(&format!("retained = {retained}\n"));
            out.push_str(&format!("fallback = {fallback}\n"));
            out.push_str(&format!("degenerate_spread = {degenerate_spread}\n"));
            if fallback {
                eprintln!("warning: every sample was flagged; estimate is the mean of all samples");
            }
        }
    }
    Ok(out)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn cmd_simulate(config: Option<&Path>, flags: Overrides) -> Result<String, Failure> {
    let file = match config {
        Some(path) => parse_config(&read(path)?)
            .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?,
        None => Default::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = resolve(file, flags, env_seed.as_deref()).map_err(|e| Failure::new(2, e))?;

    fs::create_dir_all(&cfg.out).map_err(|e| Failure::io(&cfg.out, e))?;
    eprintln!(
        "sweeping M = {:?}, {} trials each, seed {}, {} worker(s)",
        cfg.sweep.m_values, cfg.sweep.trials_per_m, cfg.sweep.master_seed, cfg.workers
    );
    let result = run_sweep_with_workers(&cfg.sweep, cfg.workers)?;

    let mut written = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<(), Failure> {
        let path = cfg.out.join(name);
        write(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    if cfg.format.csv() {
        emit("sweep.csv", result.to_csv())?;
    }
    if cfg.format.json() {
        emit("sweep.json", result.to_json() + "\n")?;
    }
    emit("error_vs_m.dat", result.error_plot_data())?;
    emit("variance_vs_m.dat", result.variance_plot_data())?;

    for r in &result.records {
        eprintln!(
            "M = {:>2}: |err| weighted {:.4} baseline {:.4}, var weighted {:.5} baseline {:.5}",
            r.m,
            r.weighted_mean_abs_error,
            r.baseline_mean_abs_error,
            r.weighted_error_variance,
            r.baseline_error_variance
        );
    }
    Ok(written
        .iter()
        .map(|p| format!("{}\n", p.display()))
        .collect())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Weights { stats } => cmd_weights(&stats),
        Command::Estimate {
            samples,
            stats,
            method,
            beta,
        } => cmd_estimate(&samples, stats.as_deref(), method, beta),
        Command::Simulate {
            config,
            seed,
            workers,
            out,
            format,
        } => cmd_simulate(
            config.as_deref(),
            Overrides {
                seed,
                workers,
                out,
                format,
            },
        ),
    };
    match result {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
