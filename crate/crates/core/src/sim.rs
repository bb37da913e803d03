//! Synthetic RFI environments.
//!
//! Each sample is hit by `k_i` independent RFI sources, `k_i` uniform on
//! `{1, …, M}`. Every source contributes the square of a standard normal
//! amplitude, so `P_RFI^i ~ χ²(k_i)` with mean `k_i` and variance `2k_i`.
//! Sources are independent across samples, so the covariance is diagonal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{validate_statistics, Covariance, RfiStatistics, SampleSet};

/// Generator used for every simulated footprint.
pub type SimRng = ChaCha8Rng;

/// Soil power used when none is given, in Watts.
pub const DEFAULT_SOIL_POWER: f64 = 1.0;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of `parent`. Pure, so parallel trials get
/// the same generators no matter which thread runs them.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// One simulated footprint: how many sources hit each sample, plus the
/// true soil power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfiEnvironment {
    max_sources: u32,
    active_counts: Vec<u32>,
    soil_power: f64,
    seed: u64,
}

impl RfiEnvironment {
    pub fn new(
        max_sources: u32,
        active_counts: Vec<u32>,
        soil_power: f64,
        seed: u64,
    ) -> Result<Self> {
        if max_sources < 1 {
            return Err(Error::InvalidParameter(
                "max_sources must be at least 1".into(),
            ));
        }
        if active_counts.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "footprint needs at least 2 samples, got {}",
                active_counts.len()
            )));
        }
        if let Some(i) = active_counts.iter().position(|&k| k < 1 || k > max_sources) {
            return Err(Error::InvalidParameter(format!(
                "active count k[{i}] = {} outside [1, {max_sources}]",
                active_counts[i]
            )));
        }
        if !(soil_power >= 0.0 && soil_power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "soil power must be finite and non-negative, got {soil_power}"
            )));
        }
        Ok(RfiEnvironment {
            max_sources,
            active_counts,
            soil_power,
            seed,
        })
    }

    /// Draws the active counts from `seed` and keeps a derived seed for the
    /// RFI powers.
    pub fn generate(max_sources: u32, n: usize, soil_power: f64, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(derive_seed(seed, 0));
        let counts = draw_active_counts(max_sources, n, &mut rng)?;
        RfiEnvironment::new(max_sources, counts, soil_power, derive_seed(seed, 1))
    }

    pub fn max_sources(&self) -> u32 {
        self.max_sources
    }

    pub fn active_counts(&self) -> &[u32] {
        &self.active_counts
    }

    pub fn soil_power(&self) -> f64 {
        self.soil_power
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.active_counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active_counts.is_empty()
    }
}

/// `n` i.i.d. draws, uniform on `{1, …, M}`.
pub fn draw_active_counts<R: Rng + ?Sized>(
    max_sources: u32,
    n: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if max_sources < 1 {
        return Err(Error::InvalidParameter(format!(
            "max_sources must be at least 1, got {max_sources}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "footprint needs at least 2 samples, got {n}"
        )));
    }
    Ok((0..n).map(|_| rng.random_range(1..=max_sources)).collect())
}

/// `μ_i = k_i`, `Σ = diag(2k_i)`.
pub fn derive_statistics(active_counts: &[u32]) -> Result<RfiStatistics> {
    if active_counts.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "footprint needs at least 2 samples, got {}",
            active_counts.len()
        )));
    }
    if let Some(i) = active_counts.iter().position(|&k| k < 1) {
        return Err(Error::InvalidParameter(format!(
            "active count k[{i}] is zero"
        )));
    }
    let mean = active_counts.iter().map(|&k| f64::from(k)).collect();
    let var = active_counts.iter().map(|&k| 2.0 * f64::from(k)).collect();
    validate_statistics(mean, Covariance::Diagonal(var))
}

#[inline]
fn chi_squared<R: Rng + ?Sized>(k: u32, rng: &mut R) -> f64 {
    (0..k)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * z
        })
        .sum()
}

/// Sum of `k` squared standard normals.
pub fn draw_rfi_power<R: Rng + ?Sized>(k: u32, rng: &mut R) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidParameter(
            "chi-squared degrees of freedom must be >= 1".into(),
        ));
    }
    Ok(chi_squared(k, rng))
}

/// Draws `p_i = p_soil + P_RFI^i` for every sample of the environment and
/// returns them with the statistics the estimator is allowed to know.
pub fn synthesize_footprint(env: &RfiEnvironment) -> Result<(SampleSet, RfiStatistics)> {
    let stats = derive_statistics(&env.active_counts)?;
    let mut rng = rng_from_seed(env.seed);
    let values = env
        .active_counts
        .iter()
        .map(|&k| env.soil_power + chi_squared(k, &mut rng))
        .collect();
    Ok((SampleSet::new(values)?, stats))
}
