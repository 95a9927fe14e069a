use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{line_fit, LineFit};

/// Window of coherence values used for the stretched-exponential fit.
const FIT_WINDOW: (f64, f64) = (0.05, 0.95);
/// A quadratic term shifting `ln T2` by more than this across the data
/// range is reported as curvature.
const CURVATURE_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchedFit {
    pub t2: f64,
    pub stretch: f64,
    pub fit: LineFit,
}

/// Fits `C = exp(−(τ/T2)^p)` through `ln(−ln C)` against `ln τ`.
pub fn stretched_exponential_t2(taus: &[f64], coherence: &[f64]) -> Result<StretchedFit> {
    if taus.len() != coherence.len() {
        return Err(Error::DimensionMismatch { expected: taus.len(), found: coherence.len() });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(coherence)
        .filter(|&(&t, &c)| t > 0.0 && c > FIT_WINDOW.0 && c < FIT_WINDOW.1)
        .map(|(&t, &c)| (t.ln(), (-c.ln()).ln()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} points with coherence in ({}, {}); extend the delay grid",
            x.len(),
            FIT_WINDOW.0,
            FIT_WINDOW.1
        )));
    }
    let fit = line_fit(&x, &y).ok_or_else(|| Error::Fit("degenerate delay grid".into()))?;
    if !(fit.slope > 0.0) {
        return Err(Error::Fit("coherence does not decay over the grid".into()));
    }
    Ok(StretchedFit { t2: (-fit.intercept / fit.slope).exp(), stretch: fit.slope, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub beta: f64,
    pub beta_stderr: f64,
    /// `T2` at N = 1 from the fitted line.
    pub prefactor: f64,
    pub points: Vec<(u32, f64)>,
    /// Quadratic coefficient of `ln T2` in `ln N` (zero with < 4 points).
    pub curvature: f64,
    pub curvature_stderr: f64,
    pub curvature_warning: bool,
    pub fit: LineFit,
}

/// Log-log fit of `T2 ∝ N^β`, with a quadratic residual test for curvature.
pub fn t2_scaling_fit(points: &[(u32, f64)]) -> Result<ScalingFit> {
    if let Some(&(n, t2)) = points.iter().find(|&&(n, t2)| n == 0 || !(t2 > 0.0) || !t2.is_finite()) {
        return Err(invalid(format!("scaling fit needs N ≥ 1 and finite positive T2, got ({n}, {t2})")));
    }
    let x: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|&(_, t)| t.ln()).collect();
    let fit = line_fit(&x, &y).ok_or_else(|| Error::Fit("need at least two distinct N".into()))?;

    let (mut curvature, mut curvature_stderr, mut curvature_warning) = (0.0, 0.0, false);
    if points.len() >= 4 {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let design = DMatrix::from_fn(x.len(), 3, |i, j| (x[i] - mean).powi(j as i32));
        let rhs = DVector::from_column_slice(&y);
        let normal = design.transpose() * &design;
        if let Some(inv) = normal.clone().try_inverse() {
            let coef = &inv * design.transpose() * &rhs;
            let rss = (&design * &coef - &rhs).norm_squared();
            let var = rss / (x.len() - 3) as f64;
            curvature = coef[2];
            curvature_stderr = (var * inv[(2, 2)]).max(0.0).sqrt();
            let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
            let effect = curvature.abs() * span * span / 4.0;
            curvature_warning = effect > CURVATURE_TOL && curvature.abs() > 2.0 * curvature_stderr;
            if curvature_warning {
                log::warn!(
                    "T2(N) bends away from a power law: quadratic term {curvature:.3} ± {curvature_stderr:.3} in ln N"
                );
            }
        }
    }
    Ok(ScalingFit {
        beta: fit.slope,
        beta_stderr: fit.slope_stderr,
        prefactor: fit.intercept.exp(),
        points: points.to_vec(),
        curvature,
        curvature_stderr,
        curvature_warning,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovered() {
        let pts: Vec<(u32, f64)> = [1u32, 2, 4, 8, 16, 32].iter().map(|&n| (n, 1e-3 * (n as f64).powf(2.0 / 3.0))).collect();
        let fit = t2_scaling_fit(&pts).unwrap();
        assert!((fit.beta - 2.0 / 3.0).abs() < 1e-6);
        assert!((fit.prefactor - 1e-3).abs() < 1e-12);
        assert!(!fit.curvature_warning);
    }

    #[test]
    fn saturating_data_flagged() {
        let t1 = 2e-3;
        let pts: Vec<(u32, f64)> = [1u32, 2, 4, 8, 16, 32]
            .iter()
            .map(|&n| {
                let free = 1e-4 * n as f64;
                (n, 1.0 / (1.0 / free + 1.0 / (2.0 * t1)))
            })
            .collect();
        assert!(t2_scaling_fit(&pts).unwrap().curvature_warning);
    }

    #[test]
    fn non_positive_t2_rejected() {
        assert!(t2_scaling_fit(&[(1, 1e-3), (2, 0.0)]).is_err());
        assert!(t2_scaling_fit(&[(1, 1e-3), (2, -1.0)]).is_err());
    }

    #[test]
    fn stretched_exponential_round_trip() {
        let taus: Vec<f64> = (1..60).map(|k| k as f64 * 1e-5).collect();
        let c: Vec<f64> = taus.iter().map(|t| (-(t / 2.5e-4f64).powf(1.7)).exp()).collect();
        let fit = stretched_exponential_t2(&taus, &c).unwrap();
        assert!((fit.t2 - 2.5e-4).abs() < 1e-12 && (fit.stretch - 1.7).abs() < 1e-9);
    }
}
