//! Comparative Monte Carlo sweep over the maximum number of RFI sources.
//!
//! For every `M` the harness runs `T` independent footprints. Each
//! footprint is evaluated by both estimators on the same realization, and
//! the signed errors `e = estimate − p_soil` are aggregated per `M`.
//!
//! The reported error variance is the second moment about the true soil
//! power, `(1/T) Σ e²`, i.e. `E[(p̄ − p_soil)²]`. For the unbiased weighted
//! estimator this is its variance; for the biased baseline it includes the
//! squared bias. The centered spread is `error_variance − mean_error²`.
//!
//! Every trial owns a generator seeded from `(master_seed, M, trial_index)`.
//! Per-trial records are collected in trial order and reduced sequentially,
//! so the worker count never changes a reported value.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{baseline_estimate, weighted_sum_estimate, DetectionConfig};
use crate::io::format_float;
use crate::sim::{
    derive_seed, draw_active_counts, rng_from_seed, synthesize_footprint, RfiEnvironment,
};
use crate::solver::solve_diagonal_fast_path;
use crate::types::{Diagnostics, RfiStatistics, SampleSet, WeightSolution, FOOTPRINT_SIZE};

pub const CSV_HEADER: &str = "M,trials,weighted_mean_error,weighted_mean_abs_error,weighted_error_variance,theoretical_min_variance,baseline_mean_error,baseline_mean_abs_error,baseline_error_variance,baseline_fallback_count,retained_fraction,seed";

const FIXED_COUNTS_STREAM: u64 = u64::MAX;

/// How the per-sample source counts `k` are chosen across trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountsMode {
    /// Fresh `k` for every footprint.
    #[default]
    PerTrial,
    /// One `k` per `M`, shared by all trials.
    Fixed,
}

impl std::str::FromStr for CountsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_trial" => Ok(CountsMode::PerTrial),
            "fixed" => Ok(CountsMode::Fixed),
            other => Err(Error::InvalidParameter(format!(
                "unknown counts mode {other:?} (expected per_trial or fixed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub m_values: Vec<u32>,
    pub trials_per_m: usize,
    pub footprint_size: usize,
    pub soil_power: f64,
    pub beta: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub counts_mode: CountsMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            m_values: (1..=10).collect(),
            trials_per_m: 10_000,
            footprint_size: FOOTPRINT_SIZE,
            soil_power: crate::sim::DEFAULT_SOIL_POWER,
            beta: 1.0,
            master_seed: 0,
            counts_mode: CountsMode::PerTrial,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() {
            return Err(Error::InvalidParameter("m_values is empty".into()));
        }
        if self.m_values.contains(&0) {
            return Err(Error::InvalidParameter(
                "m_values entries must be >= 1".into(),
            ));
        }
        if self.trials_per_m < 1 {
            return Err(Error::InvalidParameter("trials_per_m must be >= 1".into()));
        }
        if self.footprint_size < 2 {
            return Err(Error::InvalidParameter(
                "footprint_size must be >= 2".into(),
            ));
        }
        if !(self.soil_power >= 0.0 && self.soil_power.is_finite()) {
            return Err(Error::InvalidParameter(
                "soil_power must be finite and non-negative".into(),
            ));
        }
        DetectionConfig::new(self.beta)?;
        Ok(())
    }
}

/// Errors and diagnostics of one footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub m: u32,
    pub trial_index: u64,
    pub weighted_error: f64,
    pub baseline_error: f64,
    pub theoretical_variance: f64,
    pub retained_count: usize,
    pub fallback: bool,
}

/// A trial together with the footprint it was computed from.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub environment: RfiEnvironment,
    pub samples: SampleSet,
    pub statistics: RfiStatistics,
    pub weights: WeightSolution,
}

pub fn trial_seed(master_seed: u64, m: u32, trial_index: u64) -> u64 {
    derive_seed(derive_seed(master_seed, u64::from(m)), trial_index)
}

fn trial_environment(m: u32, config: &SweepConfig, trial_index: u64) -> Result<RfiEnvironment> {
    let seed = trial_seed(config.master_seed, m, trial_index);
    match config.counts_mode {
        CountsMode::PerTrial => {
            RfiEnvironment::generate(m, config.footprint_size, config.soil_power, seed)
        }
        CountsMode::Fixed => {
            let counts_seed = derive_seed(
                derive_seed(config.master_seed, u64::from(m)),
                FIXED_COUNTS_STREAM,
            );
            let counts =
                draw_active_counts(m, config.footprint_size, &mut rng_from_seed(counts_seed))?;
            RfiEnvironment::new(m, counts, config.soil_power, derive_seed(seed, 1))
        }
    }
}

pub fn run_trial_detailed(m: u32, config: &SweepConfig, trial_index: u64) -> Result<TrialOutcome> {
    let detection = DetectionConfig::new(config.beta)?;
    let environment = trial_environment(m, config, trial_index)?;
    let (samples, statistics) = synthesize_footprint(&environment)?;
    let weights = solve_diagonal_fast_path(&statistics.covariance().diagonal())?;

    let weighted = weighted_sum_estimate(&samples, &statistics, &weights)?;
    let baseline = baseline_estimate(&samples, &detection);
    let (retained_count, fallback) = match baseline.diagnostics {
        Diagnostics::BaselineAverage {
            retained, fallback, ..
        } => (retained, fallback),
        Diagnostics::WeightedSum { .. } => unreachable!("baseline diagnostics"),
    };

    let record = TrialRecord {
        m,
        trial_index,
        weighted_error: weighted.value - config.soil_power,
        baseline_error: baseline.value - config.soil_power,
        theoretical_variance: weights.min_variance(),
        retained_count,
        fallback,
    };
    Ok(TrialOutcome {
        record,
        environment,
        samples,
        statistics,
        weights,
    })
}

/// Synthesizes one footprint and evaluates both estimators on it.
pub fn run_trial(m: u32, config: &SweepConfig, trial_index: u64) -> Result<TrialRecord> {
    run_trial_detailed(m, config, trial_index).map(|o| o.record)
}

/// Aggregated metrics for one value of `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "M")]
    pub m: u32,
    pub trials: usize,
    pub weighted_mean_error: f64,
    pub weighted_mean_abs_error: f64,
    pub weighted_error_variance: f64,
    pub theoretical_min_variance: f64,
    pub baseline_mean_error: f64,
    pub baseline_mean_abs_error: f64,
    pub baseline_error_variance: f64,
    pub baseline_fallback_count: usize,
    pub retained_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
}

struct Moments {
    mean: f64,
    mean_abs: f64,
    variance: f64,
}

// Population moments about the true value, summed in trial order.
fn moments(errors: impl Iterator<Item = f64> + Clone, count: usize) -> Moments {
    let t = count as f64;
    let mean = errors.clone().sum::<f64>() / t;
    let mean_abs = errors.clone().map(f64::abs).sum::<f64>() / t;
    let variance = errors.map(|e| e * e).sum::<f64>() / t;
    Moments {
        mean,
        mean_abs,
        variance,
    }
}

pub fn aggregate(m: u32, config: &SweepConfig, trials: &[TrialRecord]) -> SweepRecord {
    let t = trials.len();
    let w = moments(trials.iter().map(|r| r.weighted_error), t);
    let b = moments(trials.iter().map(|r| r.baseline_error), t);
    let n = config.footprint_size as f64;
    SweepRecord {
        m,
        trials: t,
        weighted_mean_error: w.mean,
        weighted_mean_abs_error: w.mean_abs,
        weighted_error_variance: w.variance,
        theoretical_min_variance: trials.iter().map(|r| r.theoretical_variance).sum::<f64>()
            / t as f64,
        baseline_mean_error: b.mean,
        baseline_mean_abs_error: b.mean_abs,
        baseline_error_variance: b.variance,
        baseline_fallback_count: trials.iter().filter(|r| r.fallback).count(),
        retained_fraction: trials
            .iter()
            .map(|r| r.retained_count as f64 / n)
            .sum::<f64>()
            / t as f64,
        seed: config.master_seed,
    }
}

/// Runs every trial of one `M`, in parallel on the current rayon pool.
pub fn run_trials(m: u32, config: &SweepConfig) -> Result<Vec<TrialRecord>> {
    (0..config.trials_per_m as u64)
        .into_par_iter()
        .map(|i| run_trial(m, config, i))
        .collect()
}

/// [`run_sweep_with_workers`] on the global rayon pool.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let records = config
        .m_values
        .iter()
        .map(|&m| run_trials(m, config).map(|t| aggregate(m, config, &t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        config: config.clone(),
        records,
    })
}

/// Runs the sweep on `workers` threads. `workers = 1` runs on the calling
/// thread.
pub fn run_sweep_with_workers(config: &SweepConfig, workers: usize) -> Result<SweepResult> {
    config.validate()?;
    if workers <= 1 {
        let records = config
            .m_values
            .iter()
            .map(|&m| {
                let trials = (0..config.trials_per_m as u64)
                    .map(|i| run_trial(m, config, i))
                    .collect::<Result<Vec<_>>>()?;
                Ok(aggregate(m, config, &trials))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(SweepResult {
            config: config.clone(),
            records,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run_sweep(config))
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        records_to_csv(&self.records)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    /// Mean absolute error against `M`, one block per estimator.
    pub fn error_plot_data(&self) -> String {
        self.plot_data("mean_abs_error", |r| {
            (r.weighted_mean_abs_error, r.baseline_mean_abs_error)
        })
    }

    /// Error variance against `M`, one block per estimator.
    pub fn variance_plot_data(&self) -> String {
        self.plot_data("error_variance", |r| {
            (r.weighted_error_variance, r.baseline_error_variance)
        })
    }

    // Blocks are separated by two blank lines (gnuplot `index` layout).
    fn plot_data(&self, quantity: &str, pick: impl Fn(&SweepRecord) -> (f64, f64)) -> String {
        let mut out = String::new();
        for (block, name) in ["weighted", "baseline"].iter().enumerate() {
            if block > 0 {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# {name}");
            let _ = writeln!(out, "# M {quantity}");
            for r in &self.records {
                let (w, b) = pick(r);
                let v = if block == 0 { w } else { b };
                let _ = writeln!(out, "{} {}", r.m, format_float(v));
            }
        }
        out
    }
}

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(128 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.m,
            r.trials,
            format_float(r.weighted_mean_error),
            format_float(r.weighted_mean_abs_error),
            format_float(r.weighted_error_variance),
            format_float(r.theoretical_min_variance),
            format_float(r.baseline_mean_error),
            format_float(r.baseline_mean_abs_error),
            format_float(r.baseline_error_variance),
            r.baseline_fallback_count,
            format_float(r.retained_fraction),
            r.seed,
        );
    }
    out
}

pub fn records_from_csv(s: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = s.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        _ => return Err(Error::parse(1, "missing or unexpected CSV header")),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 12 {
            return Err(Error::parse(
                line_no,
                format!("expected 12 fields, found {}", fields.len()),
            ));
        }
        let float = |k: usize| -> Result<f64> {
            fields[k]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad number {:?}", fields[k])))
        };
        let int = |k: usize| -> Result<u64> {
            fields[k]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad integer {:?}", fields[k])))
        };
        records.push(SweepRecord {
            m: int(0)? as u32,
            trials: int(1)? as usize,
            weighted_mean_error: float(2)?,
            weighted_mean_abs_error: float(3)?,
            weighted_error_variance: float(4)?,
            theoretical_min_variance: float(5)?,
            baseline_mean_error: float(6)?,
            baseline_mean_abs_error: float(7)?,
            baseline_error_variance: float(8)?,
            baseline_fallback_count: int(9)? as usize,
            retained_fraction: float(10)?,
            seed: int(11)?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(m_values: Vec<u32>, trials: usize) -> SweepConfig {
        SweepConfig {
            m_values,
            trials_per_m: trials,
            master_seed: 42,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn single_source_trial_has_uniform_weights() {
        let cfg = small(vec![1], 1);
        let out = run_trial_detailed(1, &cfg, 0).unwrap();
        assert!(out.weights.weights().iter().all(|&w| w == 1.0 / 256.0));
        assert_eq!(out.record.theoretical_variance, 1.0 / 128.0);
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = small(vec![4], 1);
        assert_eq!(
            run_trial(4, &cfg, 17).unwrap(),
            run_trial(4, &cfg, 17).unwrap()
        );
        assert_ne!(
            run_trial(4, &cfg, 17).unwrap(),
            run_trial(4, &cfg, 18).unwrap()
        );
    }

    #[test]
    fn single_trial_aggregates_to_itself() {
        let cfg = small(vec![3], 1);
        let trial = run_trial(3, &cfg, 0).unwrap();
        let res = run_sweep(&cfg).unwrap();
        let r = &res.records[0];
        assert_eq!(r.m, 3);
        assert_eq!(r.trials, 1);
        assert_eq!(r.weighted_mean_error, trial.weighted_error);
        assert_eq!(r.weighted_mean_abs_error, trial.weighted_error.abs());
        assert_eq!(r.weighted_error_variance, trial.weighted_error.powi(2));
        assert_eq!(r.theoretical_min_variance, trial.theoretical_variance);
        assert_eq!(r.baseline_mean_error, trial.baseline_error);
        assert_eq!(r.baseline_error_variance, trial.baseline_error.powi(2));
        assert_eq!(r.retained_fraction, trial.retained_count as f64 / 256.0);
    }

    #[test]
    fn fixed_counts_mode_shares_k_across_trials() {
        let cfg = SweepConfig {
            counts_mode: CountsMode::Fixed,
            ..small(vec![5], 3)
        };
        let a = run_trial_detailed(5, &cfg, 0).unwrap();
        let b = run_trial_detailed(5, &cfg, 1).unwrap();
        assert_eq!(a.environment.active_counts(), b.environment.active_counts());
        assert_ne!(a.samples, b.samples);

        let cfg = small(vec![5], 3);
        let a = run_trial_detailed(5, &cfg, 0).unwrap();
        let b = run_trial_detailed(5, &cfg, 1).unwrap();
        assert_ne!(a.environment.active_counts(), b.environment.active_counts());
    }

    #[test]
    fn config_validation() {
        assert!(small(vec![], 1).validate().is_err());
        assert!(small(vec![0, 1], 1).validate().is_err());
        assert!(small(vec![1], 0).validate().is_err());
        assert!(SweepConfig {
            beta: 0.0,
            ..small(vec![1], 1)
        }
        .validate()
        .is_err());
        assert!(SweepConfig {
            footprint_size: 1,
            ..small(vec![1], 1)
        }
        .validate()
        .is_err());
        assert!(SweepConfig {
            soil_power: -1.0,
            ..small(vec![1], 1)
        }
        .validate()
        .is_err());
        assert!(run_sweep(&small(vec![1], 0)).is_err());
    }

    #[test]
    fn csv_layout() {
        let res = run_sweep(&small(vec![1, 2], 20)).unwrap();
        let csv = res.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("1,20,"));
        assert!(lines[2].ends_with(",42"));
        assert_eq!(records_from_csv(&csv).unwrap(), res.records);
    }

    #[test]
    fn csv_parse_errors() {
        assert!(records_from_csv("M,trials\n").is_err());
        let bad = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(matches!(
            records_from_csv(&bad),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn plot_data_has_one_block_per_estimator() {
        let res = run_sweep(&small(vec![1, 2, 3], 10)).unwrap();
        let text = res.error_plot_data();
        let blocks: Vec<&str> = text.split("\n\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert!(blocks[0].starts_with("# weighted"));
        assert!(blocks[1].starts_with("# baseline"));
        for block in blocks {
            let rows: Vec<&str> = block.lines().filter(|l| !l.starts_with('#')).collect();
            assert_eq!(rows.len(), 3);
            assert_eq!(rows[0].split_whitespace().count(), 2);
        }
        assert!(res.variance_plot_data().contains("# M error_variance"));
    }
}
