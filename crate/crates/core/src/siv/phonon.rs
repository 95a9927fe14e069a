use serde::Serialize;

use super::hamiltonian::orbital_splitting;
use super::params::{PhononBathParams, SivLevelParams, TransitionRates};
use crate::error::{invalid, Error, Result};
use crate::numeric::{line_fit, LineFit};
use crate::units::{angular, frequency_to_kelvin, BOLTZMANN, HBAR, PLANCK};

/// Bose-Einstein occupation `1/(e^{hδ/k_BT} − 1)`; zero at `T = 0`.
pub fn bose_occupation(delta: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (frequency_to_kelvin(delta) / temperature).exp_m1()
}

/// Single-phonon rates at the zero-field orbital gap. Strain enters only
/// through the enlarged gap.
pub fn phonon_rates(level: &SivLevelParams, bath: &PhononBathParams) -> Result<TransitionRates> {
    level.validate()?;
    bath.validate()?;
    let delta = orbital_splitting(level);
    let prefactor = 2.0 * std::f64::consts::PI * bath.coupling_density_product * angular(delta).powi(3);
    let n = bose_occupation(delta, bath.temperature);
    TransitionRates::new(prefactor * n, prefactor * (n + 1.0))
}

/// χρ such that `γ₊ + γ₋ = total_rate` at the given gap and temperature.
pub fn calibrate_coupling(delta: f64, temperature: f64, total_rate: f64) -> Result<f64> {
    if !(delta > 0.0) || !(temperature >= 0.0) || !(total_rate > 0.0) {
        return Err(invalid("calibration needs delta > 0, T ≥ 0, rate > 0"));
    }
    let n = bose_occupation(delta, temperature);
    Ok(total_rate / (2.0 * std::f64::consts::PI * angular(delta).powi(3) * (2.0 * n + 1.0)))
}

/// High-temperature form `2πχρΔ² k_BT/ħ` of the upward rate.
pub fn linear_rate_approx(level: &SivLevelParams, bath: &PhononBathParams) -> Result<f64> {
    level.validate()?;
    bath.validate()?;
    let delta = orbital_splitting(level);
    if bath.temperature < frequency_to_kelvin(delta) {
        log::warn!(
            "linear phonon rate used at T = {} K, below hΔ/k_B = {:.3} K",
            bath.temperature,
            frequency_to_kelvin(delta)
        );
    }
    Ok(2.0 * std::f64::consts::PI * bath.coupling_density_product * angular(delta).powi(2) * BOLTZMANN * bath.temperature
        / HBAR)
}

/// Thermal UB/LB population ratio `e^{−hΔ/k_BT}`.
pub fn thermal_line_ratio(delta: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    (-frequency_to_kelvin(delta) / temperature).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct LineRatioFit {
    /// Fitted gap, Hz.
    pub delta: f64,
    pub delta_stderr: f64,
    pub fit: LineFit,
}

/// Recovers Δ from `ln(ratio)` vs `1/T`: the slope is `−hΔ/k_B`.
pub fn fit_delta_from_line_ratio(temperatures: &[f64], ratios: &[f64]) -> Result<LineRatioFit> {
    if temperatures.len() != ratios.len() || temperatures.len() < 2 {
        return Err(Error::Fit("need at least two (T, ratio) pairs of equal length".into()));
    }
    if temperatures.iter().chain(ratios).any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("temperatures and ratios must be positive".into()));
    }
    let x: Vec<f64> = temperatures.iter().map(|t| 1.0 / t).collect();
    let y: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let fit = line_fit(&x, &y).ok_or_else(|| Error::Fit("degenerate temperature grid".into()))?;
    let scale = BOLTZMANN / PLANCK;
    Ok(LineRatioFit { delta: -fit.slope * scale, delta_stderr: fit.slope_stderr * scale, fit })
}

/// Activated empirical law `1/γ₊ = τ₀ (e^{T_a/T} − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct EmpiricalOrbitalRate {
    /// τ₀, s.
    pub prefactor: f64,
    /// T_a, K.
    pub activation_temperature: f64,
}

impl Default for EmpiricalOrbitalRate {
    fn default() -> Self {
        Self { prefactor: 200e-9, activation_temperature: 2.4 }
    }
}

impl EmpiricalOrbitalRate {
    /// `1/γ₊` in seconds; infinite at `T = 0`.
    pub fn upward_lifetime(&self, temperature: f64) -> f64 {
        if temperature <= 0.0 {
            return f64::INFINITY;
        }
        self.prefactor * (self.activation_temperature / temperature).exp_m1()
    }

    pub fn upward_rate(&self, temperature: f64) -> f64 {
        1.0 / self.upward_lifetime(temperature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_reference_point() {
        // hν/k_B for 48 GHz from CODATA ratios: 4.799243e-11 K/Hz.
        let x = 48e9 * 4.799_243_073e-11;
        assert!((frequency_to_kelvin(48e9) - x).abs() < 1e-9);
        let n = bose_occupation(48e9, 4.0);
        assert!((n - 1.0 / ((x / 4.0).exp() - 1.0)).abs() < 1e-9);
        assert!((n - 1.28).abs() < 0.01);
        assert_eq!(bose_occupation(48e9, 0.0), 0.0);
    }

    #[test]
    fn occupation_classical_limit() {
        let t = 50.0 * frequency_to_kelvin(48e9);
        let n = bose_occupation(48e9, t);
        assert!((n / 50.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn calibration_hits_reference_rate() {
        let chi_rho = calibrate_coupling(45e9, 5.0, 1.0 / 39e-9).unwrap();
        let bath = PhononBathParams { coupling_density_product: chi_rho, temperature: 5.0 };
        let r = phonon_rates(&SivLevelParams::unstrained(45e9), &bath).unwrap();
        assert!((r.total() * 39e-9 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_only_emission() {
        let bath = PhononBathParams { coupling_density_product: 1e-26, temperature: 0.0 };
        let r = phonon_rates(&SivLevelParams::unstrained(45e9), &bath).unwrap();
        assert_eq!(r.gamma_plus, 0.0);
        let expect = 2.0 * std::f64::consts::PI * 1e-26 * angular(45e9).powi(3);
        assert!((r.gamma_minus / expect - 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_form_close_at_high_temperature() {
        let level = SivLevelParams::unstrained(45e9);
        let t = 10.0 * frequency_to_kelvin(45e9);
        let bath = PhononBathParams { coupling_density_product: 1e-26, temperature: t };
        let ratio = linear_rate_approx(&level, &bath).unwrap() / phonon_rates(&level, &bath).unwrap().gamma_plus;
        assert!((ratio - 1.0).abs() < 0.06, "{ratio}");
    }

    #[test]
    fn empirical_preset_values() {
        let law = EmpiricalOrbitalRate::default();
        assert!((law.upward_lifetime(1.0) / 2.0e-6 - 1.0).abs() < 0.05);
        assert!((law.upward_lifetime(0.26) / 2.0e-3 - 1.0).abs() < 0.05);
    }

    #[test]
    fn line_ratio_and_fit() {
        assert!(thermal_line_ratio(48e9, 0.5) < 0.01);
        assert!((thermal_line_ratio(48e9, 1e9) - 1.0).abs() < 1e-8);
        let temps: Vec<f64> = (0..20).map(|k| 0.1 * (100.0f64).powf(k as f64 / 19.0)).collect();
        let ratios: Vec<f64> = temps.iter().map(|&t| thermal_line_ratio(42e9, t)).collect();
        let fit = fit_delta_from_line_ratio(&temps, &ratios).unwrap();
        assert!((fit.delta / 42e9 - 1.0).abs() < 1e-9);
    }
}
