//! Footprint samples, RFI statistics and estimator outputs.
//!
//! A footprint holds `2 × 16 × 8 = 256` power samples (polarization ×
//! subband × time slot) by default, but every numeric routine in this crate
//! accepts any footprint size `n ≥ 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const POLARIZATIONS: usize = 2;
pub const SUBBANDS: usize = 16;
pub const TIMESLOTS: usize = 8;
/// Samples per antenna footprint.
pub const FOOTPRINT_SIZE: usize = POLARIZATIONS * SUBBANDS * TIMESLOTS;

/// Relative tolerance under which an asymmetric covariance is repaired by
/// averaging instead of rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    Horizontal = 0,
    Vertical = 1,
}

/// Position of one sample inside the two frequency-time spectrograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleIndex {
    polarization: Polarization,
    subband: u8,
    timeslot: u8,
}

impl SampleIndex {
    pub fn new(polarization: Polarization, subband: usize, timeslot: usize) -> Result<Self> {
        if subband >= SUBBANDS {
            return Err(Error::InvalidParameter(format!(
                "subband {subband} outside [0, {SUBBANDS})"
            )));
        }
        if timeslot >= TIMESLOTS {
            return Err(Error::InvalidParameter(format!(
                "timeslot {timeslot} outside [0, {TIMESLOTS})"
            )));
        }
        Ok(SampleIndex {
            polarization,
            subband: subband as u8,
            timeslot: timeslot as u8,
        })
    }

    /// Inverse of [`SampleIndex::flat`].
    pub fn from_flat(index: usize) -> Option<Self> {
        if index >= FOOTPRINT_SIZE {
            return None;
        }
        let polarization = if index / (SUBBANDS * TIMESLOTS) == 0 {
            Polarization::Horizontal
        } else {
            Polarization::Vertical
        };
        let rem = index % (SUBBANDS * TIMESLOTS);
        Some(SampleIndex {
            polarization,
            subband: (rem / TIMESLOTS) as u8,
            timeslot: (rem % TIMESLOTS) as u8,
        })
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn subband(&self) -> usize {
        self.subband as usize
    }

    pub fn timeslot(&self) -> usize {
        self.timeslot as usize
    }

    /// `polarization·128 + subband·8 + timeslot`.
    pub fn flat(&self) -> usize {
        self.polarization as usize * SUBBANDS * TIMESLOTS
            + self.subband as usize * TIMESLOTS
            + self.timeslot as usize
    }
}

pub fn flat_index(idx: SampleIndex) -> usize {
    idx.flat()
}

/// Measured powers of one footprint, in Watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SampleSet {
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSamples(format!(
                "need at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples(format!(
                "sample {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(SampleSet { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spectrogram lookup; only defined for full-size footprints.
    pub fn get(&self, idx: SampleIndex) -> Option<f64> {
        if self.values.len() == FOOTPRINT_SIZE {
            Some(self.values[idx.flat()])
        } else {
            None
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for SampleSet {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        SampleSet::new(values)
    }
}

impl From<SampleSet> for Vec<f64> {
    fn from(s: SampleSet) -> Self {
        s.values
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "matrix row length",
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            data[i * n + i] = d;
        }
        SquareMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Self {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// Covariance of the additive RFI vector.
///
/// Independent RFI (the simulated environments) keeps only the diagonal so
/// per-trial work stays O(n).
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Dense(SquareMatrix),
    Diagonal(Vec<f64>),
}

impl Covariance {
    pub fn dim(&self) -> usize {
        match self {
            Covariance::Dense(m) => m.dim(),
            Covariance::Diagonal(d) => d.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Covariance::Dense(m) => m.get(i, j),
            Covariance::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    0.0
                }
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Covariance::Dense(m) => (0..m.dim()).map(|i| m.get(i, i)).collect(),
            Covariance::Diagonal(d) => d.clone(),
        }
    }

    pub fn to_dense(&self) -> SquareMatrix {
        match self {
            Covariance::Dense(m) => m.clone(),
            Covariance::Diagonal(d) => SquareMatrix::from_diagonal(d),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Covariance::Dense(m) => (0..m.dim())
                .map(|i| m.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
            Covariance::Diagonal(d) => d.iter().zip(x).map(|(a, b)| a * b).collect(),
        }
    }

    /// `xᵀ Σ x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        match self {
            Covariance::Dense(m) => (0..m.dim())
                .map(|i| x[i] * m.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .sum(),
            Covariance::Diagonal(d) => d.iter().zip(x).map(|(v, a)| v * a * a).sum(),
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        match self {
            Covariance::Dense(m) => (0..m.dim())
                .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Covariance::Diagonal(d) => d.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }
}

/// Mean vector and covariance matrix of the additive RFI, validated.
///
/// Only constructible through [`validate_statistics`], so every value in
/// circulation satisfies the shape, symmetry and positive-diagonal checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RfiStatistics {
    mean: Vec<f64>,
    covariance: Covariance,
}

impl RfiStatistics {
    pub fn new(mean: Vec<f64>, covariance: Covariance) -> Result<Self> {
        validate_statistics(mean, covariance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    pub fn into_parts(self) -> (Vec<f64>, Covariance) {
        (self.mean, self.covariance)
    }
}

/// Checks shapes, finiteness, symmetry and the diagonal, repairing
/// last-digit asymmetry by replacing `Σ` with `(Σ + Σᵀ)/2`.
pub fn validate_statistics(mean: Vec<f64>, covariance: Covariance) -> Result<RfiStatistics> {
    let n = mean.len();
    if covariance.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "covariance dimension vs mean length",
            expected: n,
            found: covariance.dim(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty statistics".into()));
    }
    if let Some(i) = mean.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mean entry {i} is not finite ({})",
            mean[i]
        )));
    }

    let covariance = match covariance {
        Covariance::Diagonal(d) => {
            check_diagonal(&d)?;
            Covariance::Diagonal(d)
        }
        Covariance::Dense(m) => {
            let mut data = m.data;
            if let Some(k) = data.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "covariance entry ({}, {}) is not finite",
                    k / n,
                    k % n
                )));
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let upper = data[i * n + j];
                    let lower = data[j * n + i];
                    let scale = upper.abs().max(lower.abs()).max(1.0);
                    if (upper - lower).abs() > SYMMETRY_TOLERANCE * scale {
                        return Err(Error::AsymmetricCovariance {
                            row: i,
                            col: j,
                            upper,
                            lower,
                        });
                    }
                    if upper != lower {
                        let avg = 0.5 * (upper + lower);
                        data[i * n + j] = avg;
                        data[j * n + i] = avg;
                    }
                }
            }
            let diag: Vec<f64> = (0..n).map(|i| data[i * n + i]).collect();
            check_diagonal(&diag)?;
            Covariance::Dense(SquareMatrix { n, data })
        }
    };

    Ok(RfiStatistics { mean, covariance })
}

fn check_diagonal(diag: &[f64]) -> Result<()> {
    for (index, &value) in diag.iter().enumerate() {
        // NaN fails this comparison as well.
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonpositiveDiagonal { index, value });
        }
    }
    Ok(())
}

/// Optimal weights for the weighted-sum estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSolution {
    weights: Vec<f64>,
    multiplier: f64,
    min_variance: f64,
}

impl WeightSolution {
    pub(crate) fn new(weights: Vec<f64>, multiplier: f64, min_variance: f64) -> Self {
        WeightSolution {
            weights,
            multiplier,
            min_variance,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Lagrange multiplier `λ` of the sum-to-one constraint, with the sign
    /// convention `ΣA + λ·1 = 0`.
    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    /// Error variance `AᵀΣA` achieved by these weights.
    pub fn min_variance(&self) -> f64 {
        self.min_variance
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    WeightedSum,
    BaselineAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Diagnostics {
    WeightedSum {
        theoretical_variance: f64,
    },
    BaselineAverage {
        /// Samples that passed detection (`g`).
        retained: usize,
        /// Every sample was flagged and the estimate fell back to the mean
        /// of all samples.
        fallback: bool,
        /// The footprint had zero spread, so nothing could be flagged.
        degenerate_spread: bool,
    },
}

/// Estimated soil power for one footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub diagnostics: Diagnostics,
}

impl Estimate {
    pub fn method(&self) -> EstimateMethod {
        match self.diagnostics {
            Diagnostics::WeightedSum { .. } => EstimateMethod::WeightedSum,
            Diagnostics::BaselineAverage { .. } => EstimateMethod::BaselineAverage,
        }
    }
}
