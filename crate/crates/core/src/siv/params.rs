use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Ground-state level structure. Frequencies are ordinary (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SivLevelParams {
    /// Spin-orbit splitting Δ_GS.
    pub delta_gs: f64,
    /// Transverse strain coupling between `e₊` and `e₋`.
    pub strain_splitting: f64,
    /// Magnetic field (T), lab frame with z along the symmetry axis.
    pub b_field: [f64; 3],
    pub spin_g_factor: f64,
    /// Orbital Zeeman reduction factor in [0, 1].
    pub orbital_quenching: f64,
}

impl SivLevelParams {
    /// Zero field, zero strain.
    pub fn unstrained(delta_gs: f64) -> Self {
        Self { delta_gs, strain_splitting: 0.0, b_field: [0.0; 3], spin_g_factor: 2.0, orbital_quenching: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_gs > 0.0) || !self.delta_gs.is_finite() {
            return Err(invalid(format!("delta_gs must be positive, got {}", self.delta_gs)));
        }
        if !(self.strain_splitting >= 0.0) || !self.strain_splitting.is_finite() {
            return Err(invalid(format!("strain_splitting must be non-negative, got {}", self.strain_splitting)));
        }
        if self.b_field.iter().any(|b| !b.is_finite()) || !self.spin_g_factor.is_finite() {
            return Err(invalid("magnetic field and g-factor must be finite"));
        }
        if !(0.0..=1.0).contains(&self.orbital_quenching) {
            return Err(invalid(format!("orbital_quenching must lie in [0, 1], got {}", self.orbital_quenching)));
        }
        Ok(())
    }
}

/// Phonon bath: the rate prefactor is `2π χρ Δ³` with Δ in rad/s, so χρ
/// carries units of s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononBathParams {
    pub coupling_density_product: f64,
    /// Kelvin.
    pub temperature: f64,
}

impl PhononBathParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.coupling_density_product >= 0.0) || !self.coupling_density_product.is_finite() {
            return Err(invalid("coupling_density_product must be finite and non-negative"));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(invalid(format!("temperature must be non-negative, got {}", self.temperature)));
        }
        Ok(())
    }
}

/// Upward (LB → UB) and downward phonon rates, 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

impl TransitionRates {
    pub fn new(gamma_plus: f64, gamma_minus: f64) -> Result<Self> {
        if !(gamma_plus >= 0.0) || !(gamma_minus >= gamma_plus) || !gamma_minus.is_finite() {
            return Err(invalid(format!("need 0 ≤ γ₊ ≤ γ₋, got γ₊={gamma_plus}, γ₋={gamma_minus}")));
        }
        Ok(Self { gamma_plus, gamma_minus })
    }

    /// Population relaxation rate `γ₊ + γ₋`.
    pub fn total(&self) -> f64 {
        self.gamma_plus + self.gamma_minus
    }

    /// Thermal-equilibrium UB population.
    pub fn equilibrium_upper(&self) -> f64 {
        if self.total() == 0.0 {
            0.0
        } else {
            self.gamma_plus / self.total()
        }
    }
}

/// Optical transition parameters. Linewidths are FWHM in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterOpticalParams {
    pub zpl_frequency: f64,
    /// Excited-state lifetime, s.
    pub lifetime: f64,
    pub gamma_rad: f64,
    pub gamma_dephasing: f64,
    pub zpl_branching: f64,
    pub inhomogeneous_width: f64,
}

impl EmitterOpticalParams {
    /// `γ = γ_rad + γ_d`.
    pub fn total_linewidth(&self) -> f64 {
        self.gamma_rad + self.gamma_dephasing
    }

    /// Fourier-limited linewidth `1/(2π τ)`.
    pub fn transform_limit(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.lifetime)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.zpl_frequency, self.lifetime, self.gamma_rad];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("zpl_frequency, lifetime and gamma_rad must be positive"));
        }
        if !(self.gamma_dephasing >= 0.0) || !(self.inhomogeneous_width >= 0.0) {
            return Err(invalid("gamma_dephasing and inhomogeneous_width must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.zpl_branching) {
            return Err(invalid(format!("zpl_branching must lie in [0, 1], got {}", self.zpl_branching)));
        }
        // Small slack: quoted γ_rad values are rounded.
        if self.total_linewidth() < self.transform_limit() * (1.0 - 1e-2) {
            return Err(invalid(format!(
                "linewidth {:.4e} Hz is below the transform limit {:.4e} Hz",
                self.total_linewidth(),
                self.transform_limit()
            )));
        }
        Ok(())
    }
}
