use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Two-sided power spectral density of `δω(t)` (rad/s), in rad²/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoisePsd {
    /// Autocorrelation `σ² e^{−|τ|/τ_c}`, spectrum `2σ²τ_c / (1 + ω²τ_c²)`.
    OrnsteinUhlenbeck { sigma: f64, tau_c: f64 },
    /// `A (ω/ω_ref)^{−α}` on `[low_cutoff, high_cutoff]`, zero outside.
    /// `ω_ref` is the low cutoff, or 1 rad/s when that is zero.
    PowerLaw { amplitude: f64, exponent: f64, low_cutoff: f64, high_cutoff: f64 },
    /// Static Gaussian detuning of standard deviation σ (rad/s).
    QuasiStaticGaussian { sigma: f64 },
}

impl NoisePsd {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoisePsd::OrnsteinUhlenbeck { sigma, tau_c } => {
                if !(sigma >= 0.0) || !(tau_c > 0.0) || !sigma.is_finite() || !tau_c.is_finite() {
                    return Err(invalid("OU noise needs σ ≥ 0 and τ_c > 0"));
                }
            }
            NoisePsd::PowerLaw { amplitude, exponent, low_cutoff, high_cutoff } => {
                if !(amplitude >= 0.0) || !amplitude.is_finite() || !exponent.is_finite() {
                    return Err(invalid("power-law amplitude must be finite and non-negative"));
                }
                if !(low_cutoff >= 0.0) || !(high_cutoff > low_cutoff) {
                    return Err(invalid("power-law cutoffs need 0 ≤ low < high"));
                }
            }
            NoisePsd::QuasiStaticGaussian { sigma } => {
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return Err(invalid("quasi-static σ must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }

    /// `S(ω)` for `ω > 0`; the quasi-static model has no continuous part.
    pub fn density(&self, omega: f64) -> f64 {
        match *self {
            NoisePsd::OrnsteinUhlenbeck { sigma, tau_c } => 2.0 * sigma * sigma * tau_c / (1.0 + (omega * tau_c).powi(2)),
            NoisePsd::PowerLaw { amplitude, exponent, low_cutoff, high_cutoff } => {
                if omega < low_cutoff || omega > high_cutoff {
                    0.0
                } else {
                    let reference = if low_cutoff > 0.0 { low_cutoff } else { 1.0 };
                    amplitude * (omega / reference).powf(-exponent)
                }
            }
            NoisePsd::QuasiStaticGaussian { .. } => 0.0,
        }
    }

    /// Support of the continuous spectrum.
    pub(crate) fn band(&self) -> (f64, f64) {
        match *self {
            NoisePsd::PowerLaw { low_cutoff, high_cutoff, .. } => (low_cutoff, high_cutoff),
            NoisePsd::OrnsteinUhlenbeck { .. } => (0.0, f64::INFINITY),
            NoisePsd::QuasiStaticGaussian { .. } => (0.0, 0.0),
        }
    }

    /// Quasi-static variance (delta function at ω = 0).
    pub fn static_variance(&self) -> f64 {
        match *self {
            NoisePsd::QuasiStaticGaussian { sigma } => sigma * sigma,
            _ => 0.0,
        }
    }

    /// Whether `S` is non-increasing in ω over its support.
    pub fn is_monotone_decreasing(&self) -> bool {
        match *self {
            NoisePsd::PowerLaw { exponent, low_cutoff, .. } => exponent >= 0.0 && low_cutoff == 0.0,
            _ => true,
        }
    }
}
