use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units::angular;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinQubitParams {
    /// `f_↑↓`, Hz.
    pub transition_frequency: f64,
    /// Ω, Hz.
    pub rabi_frequency: f64,
    /// Spin T1 (s); `None` disables relaxation.
    pub t1_floor: Option<f64>,
}

impl SpinQubitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.transition_frequency > 0.0) || !(self.rabi_frequency >= 0.0) {
            return Err(invalid("spin qubit needs f > 0 and Ω ≥ 0"));
        }
        if !self.rabi_frequency.is_finite() || !self.transition_frequency.is_finite() {
            return Err(invalid("spin qubit frequencies must be finite"));
        }
        if let Some(t1) = self.t1_floor {
            if !(t1 > 0.0) {
                return Err(invalid("T1 must be positive"));
            }
        }
        Ok(())
    }
}

/// `P↓(τ) = (Ω²/Ω_eff²) sin²(Ω_eff τ/2)` starting from `|↑⟩`, no relaxation.
pub fn rabi_trajectory(qubit: &SpinQubitParams, detuning: f64, taus: &[f64]) -> Result<Vec<f64>> {
    qubit.validate()?;
    let omega = angular(qubit.rabi_frequency);
    let delta = angular(detuning);
    let eff = omega.hypot(delta);
    if eff == 0.0 {
        return Ok(vec![0.0; taus.len()]);
    }
    let contrast = (omega / eff).powi(2);
    Ok(taus.iter().map(|t| contrast * (0.5 * eff * t).sin().powi(2)).collect())
}

/// Driven Bloch equations with amplitude damping back to `|↑⟩` at `1/T1`,
/// solved exactly by matrix exponentials of the affine generator. Pure
/// amplitude damping sets `T2 = 2T1`, so on resonance with `Ω ≫ 1/T1` the
/// oscillation envelope decays at `3/(4T1)`.
pub fn rabi_with_relaxation(qubit: &SpinQubitParams, detuning: f64, taus: &[f64]) -> Result<Vec<f64>> {
    qubit.validate()?;
    let Some(t1) = qubit.t1_floor else {
        return rabi_trajectory(qubit, detuning, taus);
    };
    let omega = angular(qubit.rabi_frequency);
    let delta = angular(detuning);
    let (g1, g2) = (1.0 / t1, 0.5 / t1);
    // d/dt (x, y, z, 1) with ṙ = (Ω, 0, δ) × r − damping.
    #[rustfmt::skip]
    let generator = Matrix4::new(
        -g2,   -delta, 0.0,    0.0,
        delta, -g2,    -omega, 0.0,
        0.0,   omega,  -g1,    g1,
        0.0,   0.0,    0.0,    0.0,
    );
    let start = Vector4::new(0.0, 0.0, 1.0, 1.0);
    Ok(taus
        .iter()
        .map(|&t| {
            let r = (generator * t).exp() * start;
            0.5 * (1.0 - r[2])
        })
        .collect())
}
