//! Minimum-variance unbiased estimation of soil emission power from a
//! radiometer footprint contaminated by additive RFI.
//!
//! Each footprint sample is `p_i = p_soil + P_RFI^i`. Given the RFI mean
//! vector `μ` and covariance `Σ`, the estimator
//!
//! ```text
//! p̄ = Σ_i A_i (p_i − μ_i),   1ᵀA = 1
//! ```
//!
//! is unbiased for any weights that sum to one, and its error variance
//! `AᵀΣA` is minimized by `A = Σ⁻¹1 / (1ᵀΣ⁻¹1)`.
//!
//! The crate also provides a detect-then-average baseline, a chi-squared
//! RFI simulator, and a Monte Carlo harness comparing the two estimators.
//!
//! ```
//! use rfi_mvue_core::{
//!     solve_min_variance_weights, weighted_sum_estimate, Covariance, RfiStatistics, SampleSet,
//! };
//!
//! let stats = RfiStatistics::new(vec![1.0, 3.0], Covariance::Diagonal(vec![2.0, 6.0])).unwrap();
//! let weights = solve_min_variance_weights(&stats).unwrap();
//! let samples = SampleSet::new(vec![11.0, 13.0]).unwrap();
//! let est = weighted_sum_estimate(&samples, &stats, &weights).unwrap();
//! assert!((est.value - 10.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod sim;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use estimators::{
    baseline_estimate, threshold_detect, weighted_sum_estimate, CenterMode, DetectionConfig,
    DetectionResult, SpreadMode,
};
pub use harness::{
    run_sweep, run_sweep_with_workers, run_trial, CountsMode, SweepConfig, SweepRecord,
    SweepResult, TrialRecord,
};
pub use sim::{
    derive_statistics, draw_active_counts, draw_rfi_power, synthesize_footprint, RfiEnvironment,
};
pub use solver::{
    evaluate_error_variance, factorization_report, solve_diagonal_fast_path,
    solve_min_variance_weights, FactorizationReport, LdlFactorization,
};
pub use types::{
    flat_index, validate_statistics, Covariance, Diagnostics, Estimate, EstimateMethod,
    Polarization, RfiStatistics, SampleIndex, SampleSet, SquareMatrix, WeightSolution,
    FOOTPRINT_SIZE,
};
