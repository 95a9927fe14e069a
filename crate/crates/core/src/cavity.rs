//! Emitter–cavity transmission, saturation and photon statistics.
//!
//! Rates are FWHM in Hz (κ is the intensity decay rate, γ the total optical
//! linewidth). The full model works in the frame rotating at the probe
//! frequency:
//!
//! `H = Δ_c a†a + Σ Δ_j σ_j†σ_j + Σ g_j (a†σ_j + aσ_j†) + ε (a + a†)`
//!
//! with collapse channels `a` (κ), `σ_j` (γ_rad) and `σ_j†σ_j` (γ_d), so the
//! optical coherence decays at `(γ_rad + γ_d)/2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{bisect, false_position};
use crate::qdyn::{
    g2, ops, steady_state_with, Channel, DensityMatrix, HilbertSpace, LindbladModel, Operator, SteadyStateOptions,
    TimeGrid,
};
use crate::siv::EmitterOpticalParams;
use crate::units::angular;

/// Smallest Fock cutoff tried by the adaptive truncation.
pub const FOCK_FLOOR: usize = 4;
/// Largest total Hilbert dimension (cavity ⊗ emitters) before the adaptive
/// cutoff gives up. Bounds the dense Liouvillian to 1024².
pub const MAX_HILBERT_DIM: usize = 32;
/// Accepted share of the photon number held by the top Fock level.
pub const FOCK_RTOL: f64 = 1e-6;
/// Emitters treated in the full Hilbert space.
pub const MAX_FULL_EMITTERS: usize = 2;
/// Bare-cavity photon number used for the weak-drive full solve.
pub const WEAK_DRIVE_PHOTONS: f64 = 1e-8;
/// Largest Hilbert dimension for which steady states are SVD-checked.
const UNIQUENESS_CHECK_MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Hz.
    pub resonance: f64,
    /// Total energy decay rate κ, Hz.
    pub kappa: f64,
    pub kappa_in: f64,
    pub kappa_out: f64,
    /// Derived `resonance / kappa`.
    pub quality_factor: f64,
}

impl CavityParams {
    /// Two-sided cavity with `κ_in = κ_out = κ/2`.
    pub fn symmetric(resonance: f64, kappa: f64) -> Self {
        Self { resonance, kappa, kappa_in: kappa / 2.0, kappa_out: kappa / 2.0, quality_factor: resonance / kappa }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.resonance, self.kappa, self.kappa_in, self.kappa_out];
        if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(invalid("cavity resonance and decay rates must be positive"));
        }
        if self.kappa_in + self.kappa_out > self.kappa * (1.0 + 1e-12) {
            return Err(invalid("port rates exceed total cavity decay"));
        }
        if (self.quality_factor * self.kappa / self.resonance - 1.0).abs() > 1e-6 {
            return Err(invalid("quality factor inconsistent with resonance/kappa"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledEmitter {
    pub optical: EmitterOpticalParams,
    /// Single-photon Rabi frequency g, Hz.
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSystem {
    pub cavity: CavityParams,
    pub emitters: Vec<CoupledEmitter>,
}

impl CoupledSystem {
    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        for e in &self.emitters {
            e.optical.validate()?;
            if !(e.g > 0.0) || !e.g.is_finite() {
                return Err(invalid(format!("coupling g must be positive, got {}", e.g)));
            }
        }
        Ok(())
    }

    fn single_emitter(&self) -> Result<&CoupledEmitter> {
        match self.emitters.as_slice() {
            [e] => Ok(e),
            other => Err(invalid(format!("operation needs exactly one emitter, system has {}", other.len()))),
        }
    }

    /// Cooperativity of the single emitter.
    pub fn cooperativity(&self) -> Result<f64> {
        let e = self.single_emitter()?;
        Ok(cooperativity(e.g, self.cavity.kappa, e.optical.total_linewidth()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Probe frequency, Hz.
    pub frequency: f64,
    /// Field drive strength ε, Hz.
    pub amplitude: f64,
}

/// `C = 4g²/(κγ)`.
pub fn cooperativity(g: f64, kappa: f64, gamma: f64) -> f64 {
    4.0 * g * g / (kappa * gamma)
}

/// Purcell-enhanced lifetime `1/(1/τ + 4g²/κ)` in the bad-cavity limit.
pub fn purcell_lifetime(system: &CoupledSystem) -> Result<f64> {
    system.validate()?;
    let e = system.single_emitter()?;
    let g = angular(e.g);
    Ok(1.0 / (1.0 / e.optical.lifetime + 4.0 * g * g / angular(system.cavity.kappa)))
}

/// Drive strength giving `n_bare` photons in the empty resonant cavity.
pub fn drive_for_photons(cavity: &CavityParams, n_bare: f64) -> f64 {
    0.5 * cavity.kappa * n_bare.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub frequency: f64,
    pub transmission: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransmissionMode {
    /// Linear response: emitter susceptibilities summed into the cavity pole.
    WeakDrive,
    /// Full steady state at the given drive strength ε (Hz).
    Driven { amplitude: f64 },
}

/// Linear-response amplitude transmission, normalized to the bare peak.
pub fn linear_transmission_amplitude(system: &CoupledSystem, frequency: f64) -> Complex64 {
    let i = Complex64::i();
    let half_kappa = 0.5 * system.cavity.kappa;
    let mut denom = i * (system.cavity.resonance - frequency) + half_kappa;
    for e in &system.emitters {
        let chi = i * (e.optical.zpl_frequency - frequency) + 0.5 * e.optical.total_linewidth();
        denom += e.g * e.g / chi;
    }
    Complex64::new(half_kappa, 0.0) / denom
}

/// Transmission normalized to the bare-cavity peak at each probe frequency.
pub fn transmission_spectrum(
    system: &CoupledSystem,
    probe_frequencies: &[f64],
    mode: TransmissionMode,
) -> Result<Vec<SpectrumPoint>> {
    system.validate()?;
    probe_frequencies
        .iter()
        .map(|&frequency| {
            let transmission = match mode {
                TransmissionMode::WeakDrive => linear_transmission_amplitude(system, frequency).norm_sqr(),
                TransmissionMode::Driven { amplitude } => {
                    driven_steady_state(system, &DriveParams { frequency, amplitude })?.transmission
                }
            };
            Ok(SpectrumPoint { frequency, transmission })
        })
        .collect()
}

/// Steady state of the full model together with derived observables.
#[derive(Debug, Clone)]
pub struct DrivenSteadyState {
    pub model: LindbladModel,
    pub rho: DensityMatrix,
    pub cavity_mode: Operator,
    pub emitter_lowering: Vec<Operator>,
    pub fock_cutoff: usize,
    /// `⟨a†a⟩`.
    pub intracavity_photons: f64,
    /// Coherent transmission `|⟨a⟩|² / (2ε/κ)²`, the quantity described by
    /// the linear-response formula.
    pub transmission: f64,
    /// `⟨a†a⟩ / (2ε/κ)²`. Exceeds `transmission` by the incoherent light the
    /// emitter feeds into the mode (dephasing, saturation).
    pub total_transmission: f64,
    /// Excited-state population of each emitter.
    pub emitter_excitation: Vec<f64>,
}

fn build_model(system: &CoupledSystem, drive: &DriveParams, cutoff: usize) -> Result<(LindbladModel, Operator, Vec<Operator>)> {
    let n_em = system.emitters.len();
    let mut dims = vec![cutoff];
    dims.extend(std::iter::repeat_n(2, n_em));
    let space = HilbertSpace::new(dims)?;
    let a = Operator::embed(&space, 0, &ops::destroy(cutoff))?;
    let ad = a.dag();
    let mut h = (&ad * &a).scale(angular(system.cavity.resonance - drive.frequency));
    h = &h + &(&a + &ad).scale(angular(drive.amplitude));
    let mut channels = vec![Channel::new(a.clone(), angular(system.cavity.kappa))];
    let mut lowering = Vec::with_capacity(n_em);
    for (j, e) in system.emitters.iter().enumerate() {
        let sm = Operator::embed(&space, j + 1, &ops::sigma_minus())?;
        let sp = sm.dag();
        let excited = &sp * &sm;
        h = &h + &excited.scale(angular(e.optical.zpl_frequency - drive.frequency));
        h = &h + &(&(&ad * &sm) + &(&a * &sp)).scale(angular(e.g));
        channels.push(Channel::new(sm.clone(), angular(e.optical.gamma_rad)));
        channels.push(Channel::new(excited, angular(e.optical.gamma_dephasing)));
        lowering.push(sm);
    }
    Ok((LindbladModel::new(h, channels)?, a, lowering))
}

fn solve_at_cutoff(system: &CoupledSystem, drive: &DriveParams, cutoff: usize) -> Result<DrivenSteadyState> {
    let (model, a, lowering) = build_model(system, drive, cutoff)?;
    let options = SteadyStateOptions { check_uniqueness: model.dimension() <= UNIQUENESS_CHECK_MAX_DIM };
    let rho = steady_state_with(&model, options)?;
    let photons = (&a.dag() * &a).expect(&rho).re;
    let field = a.expect(&rho).norm_sqr();
    let bare = (2.0 * drive.amplitude / system.cavity.kappa).powi(2);
    let (transmission, total_transmission) = if bare > 0.0 { (field / bare, photons / bare) } else { (0.0, 0.0) };
    let emitter_excitation = lowering.iter().map(|sm| (&sm.dag() * sm).expect(&rho).re).collect();
    Ok(DrivenSteadyState {
        model,
        rho,
        cavity_mode: a,
        emitter_lowering: lowering,
        fock_cutoff: cutoff,
        intracavity_photons: photons,
        transmission,
        total_transmission,
        emitter_excitation,
    })
}

/// Photon-number weight held by the highest retained Fock level,
/// `(N−1)·P(N−1)`, relative to `⟨a†a⟩`. It bounds the truncation error of
/// the photon number to leading order.
fn truncation_weight(state: &DrivenSteadyState) -> f64 {
    let cutoff = state.fock_cutoff;
    let block = state.rho.space().dimension() / cutoff;
    let top: f64 = (0..block).map(|k| state.rho.population((cutoff - 1) * block + k)).sum();
    let photons = state.intracavity_photons.abs().max(f64::MIN_POSITIVE);
    (cutoff - 1) as f64 * top.max(0.0) / photons
}

/// Full steady state with the Fock cutoff grown from [`FOCK_FLOOR`] by
/// factors of 1.5 until the top level carries less than [`FOCK_RTOL`] of
/// the photon number.
pub fn driven_steady_state(system: &CoupledSystem, drive: &DriveParams) -> Result<DrivenSteadyState> {
    system.validate()?;
    if system.emitters.len() > MAX_FULL_EMITTERS {
        return Err(invalid(format!(
            "full model supports at most {MAX_FULL_EMITTERS} emitters; use the weak-drive path for {}",
            system.emitters.len()
        )));
    }
    if !(drive.amplitude >= 0.0) || !drive.amplitude.is_finite() {
        return Err(invalid("drive amplitude must be finite and non-negative"));
    }
    let max_cutoff = MAX_HILBERT_DIM >> system.emitters.len();
    let mut cutoff = FOCK_FLOOR;
    loop {
        let state = solve_at_cutoff(system, drive, cutoff)?;
        if state.intracavity_photons == 0.0 || truncation_weight(&state) <= FOCK_RTOL {
            return Ok(state);
        }
        if cutoff == max_cutoff {
            return Err(Error::FockCutoff { max_cutoff });
        }
        cutoff = (cutoff * 3 / 2).min(max_cutoff);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionReport {
    pub cooperativity: f64,
    /// `1/(1+C)²`.
    pub ideal_transmission: f64,
    pub fit_efficiency: f64,
    /// `η (1 − 1/(1+C)²)`.
    pub extinction: f64,
}

/// Dip contrast `ΔT/T` scaled by a collection/mode-matching efficiency.
pub fn extinction(system: &CoupledSystem, fit_efficiency: f64) -> Result<ExtinctionReport> {
    if !(0.0..=1.0).contains(&fit_efficiency) {
        return Err(invalid(format!("fit efficiency must lie in [0, 1], got {fit_efficiency}")));
    }
    system.validate()?;
    let c = system.cooperativity()?;
    let ideal = (1.0 + c).powi(-2);
    Ok(ExtinctionReport { cooperativity: c, ideal_transmission: ideal, fit_efficiency, extinction: fit_efficiency * (1.0 - ideal) })
}

/// Efficiency η for which `η (1 − 1/(1+C)²)` equals `target`.
pub fn fit_extinction_efficiency(cooperativity: f64, target: f64) -> Result<f64> {
    let contrast = 1.0 - (1.0 + cooperativity).powi(-2);
    if !(contrast > 0.0) {
        return Err(Error::Fit("zero cooperativity gives no extinction".into()));
    }
    let eta = target / contrast;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Fit(format!("target {target} needs efficiency {eta:.3} outside [0, 1]")));
    }
    Ok(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaturationPoint {
    pub amplitude: f64,
    /// On-resonance coherent transmission relative to the bare cavity.
    pub transmission: f64,
    /// Same, counting all photons in the mode.
    pub total_transmission: f64,
    /// `1 − T`, the fractional dip depth.
    pub dip_depth: f64,
    /// FWHM of the transmission dip, Hz (`None` when the dip has vanished).
    pub linewidth: Option<f64>,
    pub intracavity_photons: f64,
    pub emitter_excitation: f64,
}

fn bare_transmission(system: &CoupledSystem, frequency: f64) -> f64 {
    linear_transmission_amplitude(&CoupledSystem { cavity: system.cavity, emitters: vec![] }, frequency).norm_sqr()
}

fn dip_depth(system: &CoupledSystem, frequency: f64, amplitude: f64) -> Result<f64> {
    let t = driven_steady_state(system, &DriveParams { frequency, amplitude })?.transmission;
    Ok(1.0 - t / bare_transmission(system, frequency))
}

/// On-resonance transmission and dip width versus drive strength.
///
/// The width is the full width at half depth of `1 − T/T_bare`. Each side is
/// bracketed outward from the previous width and refined by false position.
pub fn saturation_curve(system: &CoupledSystem, drive_amplitudes: &[f64]) -> Result<Vec<SaturationPoint>> {
    let e = *system.single_emitter()?;
    let center = e.optical.zpl_frequency;
    let gamma = e.optical.total_linewidth();
    let span = 50.0 * gamma.max(4.0 * e.g * e.g / system.cavity.kappa);
    let mut half_width_guess = 0.5 * (gamma + 4.0 * e.g * e.g / system.cavity.kappa);
    let mut out = Vec::with_capacity(drive_amplitudes.len());
    for &amplitude in drive_amplitudes {
        let ss = driven_steady_state(system, &DriveParams { frequency: center, amplitude })?;
        let depth = 1.0 - ss.transmission / bare_transmission(system, center);
        let linewidth = if depth > 1e-3 {
            let half = 0.5 * depth;
            let mut sides = [0.0; 2];
            for (slot, sign) in sides.iter_mut().zip([1.0, -1.0]) {
                let mut failure = None;
                let mut residual = |x: f64| match dip_depth(system, center + sign * x, amplitude) {
                    Ok(d) => d - half,
                    Err(err) => {
                        failure.get_or_insert(err);
                        f64::NAN
                    }
                };
                let mut inner = 0.0;
                let mut outer = half_width_guess;
                while outer < span {
                    let r = residual(outer);
                    if !(r > 0.0) {
                        break;
                    }
                    inner = outer;
                    outer *= 2.0;
                }
                let root = false_position(&mut residual, inner, outer.min(span), 1e-3 * gamma);
                if let Some(err) = failure {
                    return Err(err);
                }
                match root {
                    Some(x) => *slot = x,
                    None => {
                        sides = [f64::NAN; 2];
                        break;
                    }
                }
            }
            let width = sides[0] + sides[1];
            if width.is_finite() {
                half_width_guess = 0.5 * width;
            }
            width.is_finite().then_some(width)
        } else {
            None
        };
        out.push(SaturationPoint {
            amplitude,
            transmission: ss.transmission,
            total_transmission: ss.total_transmission,
            dip_depth: depth,
            linewidth,
            intracavity_photons: ss.intracavity_photons,
            emitter_excitation: ss.emitter_excitation[0],
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfSaturation {
    pub amplitude: f64,
    pub intracavity_photons: f64,
    /// Photons leaving the cavity per second, `κ⟨a†a⟩` with κ in rad/s.
    pub photon_flux: f64,
    /// Photons scattered by the emitter into free space per second, `γ_rad ⟨σ†σ⟩`.
    pub scattered_rate: f64,
    /// Total emitter emission, `⟨σ†σ⟩ / τ_Purcell`. Bounded by `1 / (2 τ_Purcell)`.
    pub emitter_emission_rate: f64,
}

/// Drive at which the resonant dip depth falls to half its weak-drive value.
pub fn half_saturation(system: &CoupledSystem) -> Result<HalfSaturation> {
    let e = *system.single_emitter()?;
    let center = e.optical.zpl_frequency;
    let weak = dip_depth(system, center, drive_for_photons(&system.cavity, WEAK_DRIVE_PHOTONS))?;
    let reference = drive_for_photons(&system.cavity, 1.0);
    let mut failure = None;
    let log_amp = bisect(
        |x| match dip_depth(system, center, reference * 10f64.powf(x)) {
            Ok(d) => d - 0.5 * weak,
            Err(err) => {
                failure.get_or_insert(err);
                f64::NAN
            }
        },
        -6.0,
        -0.5,
        1e-6,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let log_amp = log_amp.ok_or_else(|| Error::Fit("half-saturation drive not bracketed".into()))?;
    let amplitude = reference * 10f64.powf(log_amp);
    let ss = driven_steady_state(system, &DriveParams { frequency: center, amplitude })?;
    let tau_p = purcell_lifetime(system)?;
    Ok(HalfSaturation {
        amplitude,
        intracavity_photons: ss.intracavity_photons,
        photon_flux: angular(system.cavity.kappa) * ss.intracavity_photons,
        scattered_rate: angular(e.optical.gamma_rad) * ss.emitter_excitation[0],
        emitter_emission_rate: ss.emitter_excitation[0] / tau_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Port {
    /// Cavity output, annihilator `a`.
    Transmitted,
    /// Side-scattered emitter field, annihilator `Σ σ_j`.
    Scattered,
}

/// Normalized `g²(τ)` of the chosen output field.
pub fn photon_statistics(system: &CoupledSystem, drive: &DriveParams, port: Port, taugrid: &TimeGrid) -> Result<Vec<f64>> {
    let ss = driven_steady_state(system, drive)?;
    let op = match port {
        Port::Transmitted => ss.cavity_mode.clone(),
        Port::Scattered => {
            let mut it = ss.emitter_lowering.iter();
            let first = it.next().ok_or_else(|| invalid("scattered port needs at least one emitter"))?.clone();
            it.fold(first, |acc, sm| &acc + sm)
        }
    };
    g2(&ss.model, &ss.rho, &op, taugrid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dip {
    pub frequency: f64,
    pub transmission: f64,
}

/// Interior local minima of a sampled spectrum.
pub fn find_dips(spectrum: &[SpectrumPoint]) -> Vec<Dip> {
    spectrum
        .windows(3)
        .filter(|w| w[1].transmission < w[0].transmission && w[1].transmission <= w[2].transmission)
        .map(|w| Dip { frequency: w[1].frequency, transmission: w[1].transmission })
        .collect()
}
