//! The two competing footprint estimators.
//!
//! * [`weighted_sum_estimate`] removes the known RFI mean from every sample
//!   and combines them with the minimum-variance weights. Because the weights
//!   sum to one it is unbiased.
//! * [`baseline_estimate`] flags samples whose deviation from the footprint
//!   mean reaches `β·σ`, then averages the raw samples that were not
//!   flagged. It never subtracts the RFI mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Diagnostics, Estimate, RfiStatistics, SampleSet, WeightSolution};

/// Where the expected mean `m` of the threshold test comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CenterMode {
    #[default]
    SampleArithmeticMean,
}

/// Where the spread `σ` of the threshold test comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpreadMode {
    /// Divide-by-n standard deviation of the footprint.
    #[default]
    PopulationStdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    beta: f64,
    pub center_mode: CenterMode,
    pub spread_mode: SpreadMode,
}

impl DetectionConfig {
    /// `beta` may be `+∞`, which disables flagging.
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(DetectionConfig {
            beta,
            center_mode: CenterMode::default(),
            spread_mode: SpreadMode::default(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig::new(1.0).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// `true` marks a sample as RFI-contaminated.
    pub flags: Vec<bool>,
    /// Number of unflagged samples (`g`).
    pub retained_count: usize,
    /// All samples were identical, so no sample could be flagged.
    pub degenerate_spread: bool,
    pub center: f64,
    pub spread: f64,
}

/// `Σ_i A_i (p_i − μ_i)`.
pub fn weighted_sum_estimate(
    samples: &SampleSet,
    stats: &RfiStatistics,
    weights: &WeightSolution,
) -> Result<Estimate> {
    let n = samples.len();
    if stats.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "statistics vs samples",
            expected: n,
            found: stats.dim(),
        });
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            what: "weights vs samples",
            expected: n,
            found: weights.len(),
        });
    }
    let value = samples
        .values()
        .iter()
        .zip(stats.mean())
        .zip(weights.weights())
        .map(|((p, mu), a)| a * (p - mu))
        .sum();
    Ok(Estimate {
        value,
        diagnostics: Diagnostics::WeightedSum {
            theoretical_variance: weights.min_variance(),
        },
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Flags `|p_i − m| ≥ β·σ`, with `m` and `σ` the footprint's own mean and
/// population standard deviation.
pub fn threshold_detect(samples: &SampleSet, config: &DetectionConfig) -> DetectionResult {
    let values = samples.values();
    let n = values.len();
    let center = match config.center_mode {
        CenterMode::SampleArithmeticMean => mean(values),
    };
    let spread = match config.spread_mode {
        SpreadMode::PopulationStdDev => {
            (values.iter().map(|p| (p - center).powi(2)).sum::<f64>() / n as f64).sqrt()
        }
    };

    let first = values[0];
    let degenerate_spread = spread == 0.0 || values.iter().all(|&v| v == first);
    if degenerate_spread {
        return DetectionResult {
            flags: vec![false; n],
            retained_count: n,
            degenerate_spread,
            center,
            spread,
        };
    }

    let threshold = config.beta * spread;
    let flags: Vec<bool> = values
        .iter()
        .map(|p| (p - center).abs() >= threshold)
        .collect();
    let retained_count = flags.iter().filter(|&&f| !f).count();
    DetectionResult {
        flags,
        retained_count,
        degenerate_spread,
        center,
        spread,
    }
}

/// Mean of the samples that pass [`threshold_detect`]. When every sample is
/// flagged the mean of all samples is returned with `fallback` set.
pub fn baseline_estimate(samples: &SampleSet, config: &DetectionConfig) -> Estimate {
    let detection = threshold_detect(samples, config);
    let values = samples.values();
    let fallback = detection.retained_count == 0;
    let value = if fallback {
        mean(values)
    } else {
        let kept: f64 = values
            .iter()
            .zip(&detection.flags)
            .filter(|(_, &flagged)| !flagged)
            .map(|(p, _)| p)
            .sum();
        kept / detection.retained_count as f64
    };
    Estimate {
        value,
        diagnostics: Diagnostics::BaselineAverage {
            retained: detection.retained_count,
            fallback,
            degenerate_spread: detection.degenerate_spread,
        },
    }
}
