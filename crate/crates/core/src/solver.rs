//! Minimum-variance weights under the sum-to-one constraint.
//!
//! The weights minimize `AᵀΣA` subject to `1ᵀA = 1`. Stationarity of the
//! Lagrangian gives the bordered KKT system
//!
//! ```text
//! [ Σ   1 ] [ A ]   [ 0 ]
//! [ 1ᵀ  0 ] [ λ ] = [ 1 ]
//! ```
//!
//! Instead of factoring that indefinite matrix we factor `Σ = LDLᵀ`, solve
//! `Σy = 1`, and set `A = y / 1ᵀy`, `λ = -1 / 1ᵀy`. The KKT residual is then
//! checked against the bordered form.

use crate::error::{Error, Result};
use crate::types::{Covariance, RfiStatistics, SquareMatrix, WeightSolution};

/// Pivots at or below `PD_RELATIVE_TOLERANCE · max(diag Σ)` mean `Σ` is
/// treated as singular.
pub const PD_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Bound on `‖ΣA + λ1‖∞ / ‖Σ‖∞` accepted from the solver.
pub const KKT_RELATIVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationReport {
    pub is_positive_definite: bool,
    pub min_pivot: f64,
    /// `max pivot / min pivot`; a cheap lower bound on the condition number.
    pub condition_hint: f64,
}

/// `Σ = L·D·Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct LdlFactorization {
    n: usize,
    lower: Vec<f64>,
    pivots: Vec<f64>,
    tolerance: f64,
}

struct Partial {
    lower: Vec<f64>,
    pivots: Vec<f64>,
    tolerance: f64,
    failed_at: Option<usize>,
}

fn pd_tolerance(m: &SquareMatrix) -> f64 {
    let max_diag = (0..m.dim()).map(|i| m.get(i, i)).fold(0.0, f64::max);
    PD_RELATIVE_TOLERANCE * max_diag
}

// Stops at the first pivot that fails the tolerance.
fn ldl(m: &SquareMatrix) -> Partial {
    let n = m.dim();
    let tolerance = pd_tolerance(m);
    let mut lower = vec![0.0; n * n];
    let mut pivots = Vec::with_capacity(n);
    // Scratch row: w[k] = L[j][k] · d[k].
    let mut w = vec![0.0; n];

    for j in 0..n {
        let row_j = j * n;
        let mut d = m.get(j, j);
        for k in 0..j {
            w[k] = lower[row_j + k] * pivots[k];
            d -= lower[row_j + k] * w[k];
        }
        pivots.push(d);
        if d.is_nan() || d <= tolerance {
            return Partial {
                lower,
                pivots,
                tolerance,
                failed_at: Some(j),
            };
        }
        lower[row_j + j] = 1.0;
        for i in (j + 1)..n {
            let row_i = i * n;
            let dot: f64 = lower[row_i..row_i + j]
                .iter()
                .zip(&w[..j])
                .map(|(a, b)| a * b)
                .sum();
            lower[row_i + j] = (m.get(i, j) - dot) / d;
        }
    }

    Partial {
        lower,
        pivots,
        tolerance,
        failed_at: None,
    }
}

fn report_from_pivots(pivots: &[f64], tolerance: f64) -> FactorizationReport {
    let min_pivot = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    let max_pivot = pivots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    FactorizationReport {
        is_positive_definite: min_pivot > tolerance,
        min_pivot,
        condition_hint: if min_pivot > 0.0 {
            max_pivot / min_pivot
        } else {
            f64::INFINITY
        },
    }
}

/// Positive-definiteness diagnosis without failing.
pub fn factorization_report(m: &SquareMatrix) -> FactorizationReport {
    let partial = ldl(m);
    report_from_pivots(&partial.pivots, partial.tolerance)
}

impl LdlFactorization {
    pub fn factor(m: &SquareMatrix) -> Result<Self> {
        let partial = ldl(m);
        if let Some(index) = partial.failed_at {
            return Err(Error::NotPositiveDefinite {
                index,
                pivot: partial.pivots[index],
                tolerance: partial.tolerance,
            });
        }
        Ok(LdlFactorization {
            n: m.dim(),
            lower: partial.lower,
            pivots: partial.pivots,
            tolerance: partial.tolerance,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    pub fn report(&self) -> FactorizationReport {
        report_from_pivots(&self.pivots, self.tolerance)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= dot;
        }
        for (xi, d) in x.iter_mut().zip(&self.pivots) {
            *xi /= d;
        }
        for i in (0..n).rev() {
            let tail: f64 = ((i + 1)..n).map(|k| self.lower[k * n + i] * x[k]).sum();
            x[i] -= tail;
        }
        x
    }
}

/// Solves `argmin AᵀΣA s.t. 1ᵀA = 1` for the statistics' covariance.
pub fn solve_min_variance_weights(stats: &RfiStatistics) -> Result<WeightSolution> {
    let cov = stats.covariance();
    let y = match cov {
        Covariance::Dense(m) => {
            let factor = LdlFactorization::factor(m)?;
            let ones = vec![1.0; m.dim()];
            let mut y = factor.solve(&ones);
            // One step of iterative refinement on Σy = 1.
            let sy = cov.mul_vec(&y);
            let r: Vec<f64> = sy.iter().map(|v| 1.0 - v).collect();
            let dy = factor.solve(&r);
            for (a, b) in y.iter_mut().zip(dy) {
                *a += b;
            }
            y
        }
        Covariance::Diagonal(d) => {
            let max_diag = d.iter().copied().fold(0.0, f64::max);
            let tolerance = PD_RELATIVE_TOLERANCE * max_diag;
            if let Some(index) = d.iter().position(|&v| v.is_nan() || v <= tolerance) {
                return Err(Error::NotPositiveDefinite {
                    index,
                    pivot: d[index],
                    tolerance,
                });
            }
            d.iter().map(|v| 1.0 / v).collect()
        }
    };
    finish(y, cov)
}

fn finish(y: Vec<f64>, cov: &Covariance) -> Result<WeightSolution> {
    let total: f64 = y.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::NotPositiveDefinite {
            index: y.len(),
            pivot: total,
            tolerance: 0.0,
        });
    }
    let mut weights: Vec<f64> = y.iter().map(|v| v / total).collect();
    renormalize(&mut weights);
    let min_variance = 1.0 / total;
    let solution = WeightSolution::new(weights, -min_variance, min_variance);

    let residual = stationarity_residual(&solution, cov);
    let bound = KKT_RELATIVE_TOLERANCE * cov.inf_norm();
    if residual.is_nan() || residual > bound {
        return Err(Error::KktResidual { residual, bound });
    }
    Ok(solution)
}

fn renormalize(weights: &mut [f64]) {
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
}

/// Inverse-variance weights for independent RFI.
pub fn solve_diagonal_fast_path(variances: &[f64]) -> Result<WeightSolution> {
    if variances.is_empty() {
        return Err(Error::InvalidParameter("no variances given".into()));
    }
    if let Some(index) = variances.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonpositiveVariance {
            index,
            value: variances[index],
        });
    }
    let precision: f64 = variances.iter().map(|v| 1.0 / v).sum();
    let mut weights: Vec<f64> = variances.iter().map(|v| (1.0 / v) / precision).collect();
    renormalize(&mut weights);
    let min_variance = 1.0 / precision;
    Ok(WeightSolution::new(weights, -min_variance, min_variance))
}

/// `AᵀΣA`, the error variance of the weighted-sum estimator for weights `A`.
pub fn evaluate_error_variance(weights: &[f64], stats: &RfiStatistics) -> Result<f64> {
    if weights.len() != stats.dim() {
        return Err(Error::DimensionMismatch {
            what: "weights vs statistics",
            expected: stats.dim(),
            found: weights.len(),
        });
    }
    Ok(stats.covariance().quadratic_form(weights))
}

/// `‖ΣA + λ1‖∞`.
pub fn stationarity_residual(solution: &WeightSolution, cov: &Covariance) -> f64 {
    cov.mul_vec(solution.weights())
        .iter()
        .map(|v| (v + solution.multiplier()).abs())
        .fold(0.0, f64::max)
}

/// Infinity-norm residual of the full bordered system, constraint row
/// included.
pub fn kkt_residual(solution: &WeightSolution, cov: &Covariance) -> f64 {
    let constraint = (solution.weights().iter().sum::<f64>() - 1.0).abs();
    stationarity_residual(solution, cov).max(constraint)
}
