//! Two-photon interference of stationary single-photon sources, Raman
//! tuning, and collective emission of two emitters into one waveguide mode.
//!
//! Each source is described by its first-order coherence
//! `|g⁽¹⁾(τ)| = e^{−π Δν |τ|}` (Lorentzian FWHM Δν) and its antibunching
//! `g⁽²⁾(τ) = 1 − e^{−|τ|/τ₁}`. Mixing two such fields on a beamsplitter (or
//! into one waveguide mode) gives
//!
//! `G(τ) = [I₁² g₁⁽²⁾ + I₂² g₂⁽²⁾ + 2 I₁ I₂ (1 ± V |g₁⁽¹⁾||g₂⁽¹⁾| cos 2πδτ)] / (I₁ + I₂)²`
//!
//! with the minus sign at a beamsplitter output and the plus sign for a
//! common mode. Detection then mixes in uncorrelated counts and smears the
//! histogram with the detector timing response.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{bisect, golden_min, integrate, zero_crossings};
use crate::siv::EmitterOpticalParams;

/// Raman tuning range beyond which a warning is issued, Hz.
pub const RAMAN_TUNING_RANGE: f64 = 10e9;

const KERNEL_SIGMAS: f64 = 8.0;
const CONVOLUTION_RTOL: f64 = 1e-10;
const CONVOLUTION_ATOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglePhotonSource {
    /// Emission frequency, Hz.
    pub frequency: f64,
    /// Lorentzian FWHM, Hz.
    pub linewidth: f64,
    /// Antibunching time, s.
    pub lifetime: f64,
    /// Radians.
    pub polarization_angle: f64,
    /// Detected counts per second, background included.
    pub emission_rate: f64,
    /// Fraction of `emission_rate` that is uncorrelated background.
    pub background_fraction: f64,
}

impl SinglePhotonSource {
    pub fn validate(&self) -> Result<()> {
        if !(self.lifetime > 0.0) || !(self.linewidth > 0.0) || !(self.emission_rate > 0.0) {
            return Err(invalid("source lifetime, linewidth and emission rate must be positive"));
        }
        if self.linewidth < (1.0 - 1e-9) / (2.0 * PI * self.lifetime) {
            return Err(invalid(format!(
                "linewidth {:.4e} Hz is below the transform limit of a {:.3e} s lifetime",
                self.linewidth, self.lifetime
            )));
        }
        if !(0.0..1.0).contains(&self.background_fraction) {
            return Err(invalid(format!("background_fraction must lie in [0, 1), got {}", self.background_fraction)));
        }
        if !self.frequency.is_finite() || !self.polarization_angle.is_finite() {
            return Err(invalid("source frequency and polarization must be finite"));
        }
        Ok(())
    }

    pub fn signal_rate(&self) -> f64 {
        self.emission_rate * (1.0 - self.background_fraction)
    }

    fn coherence(&self, tau: f64) -> f64 {
        (-PI * self.linewidth * tau.abs()).exp()
    }

    fn antibunching(&self, tau: f64) -> f64 {
        -(-tau.abs() / self.lifetime).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DetectorModel {
    /// Gaussian σ of the coincidence timing response, s.
    pub timing_jitter_sigma: f64,
    /// Dark counts per second per detector.
    pub dark_rate: f64,
    /// Histogram bin width, s (0 for point sampling).
    pub coincidence_bin: f64,
}

impl DetectorModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.timing_jitter_sigma, self.dark_rate, self.coincidence_bin];
        if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(invalid("detector parameters must be finite and non-negative"));
        }
        Ok(())
    }

    /// `⟨f⟩` over the timing response (Gaussian ⊗ bin box) centred on `tau`.
    fn smear<F: Fn(f64) -> f64>(&self, f: F, tau: f64) -> f64 {
        let (sigma, bin) = (self.timing_jitter_sigma, self.coincidence_bin);
        if sigma == 0.0 && bin == 0.0 {
            return f(tau);
        }
        let half_bin = 0.5 * bin;
        let reach = half_bin + KERNEL_SIGMAS * sigma;
        let kernel = |s: f64| -> f64 {
            if sigma == 0.0 {
                if s.abs() <= half_bin { 1.0 / bin } else { 0.0 }
            } else if bin == 0.0 {
                (-0.5 * (s / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
            } else {
                let z = FRAC_1_SQRT_2 / sigma;
                0.5 * (libm::erf((s + half_bin) * z) - libm::erf((s - half_bin) * z)) / bin
            }
        };
        // Split at the |τ| kink of the correlation and at box edges.
        let mut breaks = vec![0.0];
        if sigma == 0.0 {
            breaks.extend([tau - half_bin, tau + half_bin]);
        }
        integrate(|u| f(u) * kernel(u - tau), tau - reach, tau + reach, &breaks, CONVOLUTION_RTOL, CONVOLUTION_ATOL).value
    }
}

/// Fraction of detected counts that come from the sources' single photons.
fn signal_fraction(sources: &[&SinglePhotonSource], detector: &DetectorModel) -> f64 {
    let signal: f64 = sources.iter().map(|s| s.signal_rate()).sum();
    let total: f64 = sources.iter().map(|s| s.emission_rate).sum::<f64>() + 2.0 * detector.dark_rate;
    signal / total
}

/// Mixing of two sources; `sign` is −1 at a beamsplitter output, +1 in a
/// common mode. Returns (full, interference term).
fn two_source_correlation(s1: &SinglePhotonSource, s2: &SinglePhotonSource, sign: f64, visibility: f64, tau: f64) -> (f64, f64) {
    let (i1, i2) = (s1.signal_rate(), s2.signal_rate());
    let norm = (i1 + i2).powi(2);
    let delta = s1.frequency - s2.frequency;
    let interference =
        sign * 2.0 * i1 * i2 * visibility * s1.coherence(tau) * s2.coherence(tau) * (2.0 * PI * delta * tau).cos() / norm;
    let incoherent = (i1 * i1 * s1.antibunching(tau) + i2 * i2 * s2.antibunching(tau) + 2.0 * i1 * i2) / norm;
    (incoherent + interference, interference)
}

/// Polarization overlap `cos²(θ₁ − θ₂)`.
pub fn polarization_overlap(s1: &SinglePhotonSource, s2: &SinglePhotonSource) -> f64 {
    (s1.polarization_angle - s2.polarization_angle).cos().powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomCurve {
    /// Delay, s.
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    /// Detected two-photon interference term (zero for orthogonal photons).
    pub interference: Vec<f64>,
}

impl HomCurve {
    /// Quantum-beat period from the sign changes of the interference term at
    /// positive delay: twice the mean spacing of successive zero crossings.
    pub fn beat_period(&self) -> Option<f64> {
        let (t, y): (Vec<f64>, Vec<f64>) =
            self.tau.iter().zip(&self.interference).filter(|(t, _)| **t > 0.0).map(|(t, y)| (*t, *y)).unzip();
        let z = zero_crossings(&t, &y);
        if z.len() < 2 {
            return None;
        }
        Some(2.0 * (z[z.len() - 1] - z[0]) / (z.len() - 1) as f64)
    }

    pub fn at_zero(&self) -> Option<f64> {
        self.tau.iter().position(|t| *t == 0.0).map(|k| self.g2[k])
    }
}

/// Coincidences between the two outputs of a 50:50 beamsplitter fed by
/// `s1` and `s2`, normalized to uncorrelated arrivals.
pub fn hom_g2(s1: &SinglePhotonSource, s2: &SinglePhotonSource, detector: &DetectorModel, taus: &[f64]) -> Result<HomCurve> {
    s1.validate()?;
    s2.validate()?;
    detector.validate()?;
    let rho2 = signal_fraction(&[s1, s2], detector).powi(2);
    let visibility = polarization_overlap(s1, s2);
    let mut g2 = Vec::with_capacity(taus.len());
    let mut interference = Vec::with_capacity(taus.len());
    for &tau in taus {
        let full = detector.smear(|u| two_source_correlation(s1, s2, -1.0, visibility, u).0, tau);
        let beat = detector.smear(|u| two_source_correlation(s1, s2, -1.0, visibility, u).1, tau);
        g2.push(1.0 + rho2 * (full - 1.0));
        interference.push(rho2 * beat);
    }
    Ok(HomCurve { tau: taus.to_vec(), g2, interference })
}

/// `η = 1 − g²∥(0) / g²⊥(0)`.
pub fn hom_visibility(g2_parallel: f64, g2_perpendicular: f64) -> Result<f64> {
    if g2_perpendicular == 0.0 {
        return Err(invalid("g²⊥(0) is zero; visibility undefined"));
    }
    Ok(1.0 - g2_parallel / g2_perpendicular)
}

/// Measured zero-delay values with one-sigma errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomTargets {
    pub parallel: f64,
    pub parallel_err: f64,
    pub perpendicular: f64,
    pub perpendicular_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomFit {
    pub jitter_sigma: f64,
    /// Common background fraction of both sources (no dark counts).
    pub background_fraction: f64,
    pub signal_fraction_squared: f64,
    pub g2_parallel: f64,
    pub g2_perpendicular: f64,
    pub chi_squared: f64,
}

/// Jointly fits timing jitter and background to the parallel and
/// perpendicular zero-delay values by weighted least squares.
///
/// For fixed jitter the detected values are affine in ρ², so ρ² is solved in
/// closed form; the jitter is then optimized by golden-section search on
/// `[0, sigma_max]`.
pub fn fit_hom_imperfections(
    s1: &SinglePhotonSource,
    s2: &SinglePhotonSource,
    targets: &HomTargets,
    sigma_max: f64,
) -> Result<HomFit> {
    let clean = |s: &SinglePhotonSource| SinglePhotonSource { background_fraction: 0.0, ..*s };
    let (a, b) = (clean(s1), clean(s2));
    let b_perp = SinglePhotonSource { polarization_angle: a.polarization_angle + 0.5 * PI, ..b };
    let b_par = SinglePhotonSource { polarization_angle: a.polarization_angle, ..b };
    let w = [targets.parallel_err.powi(-2), targets.perpendicular_err.powi(-2)];
    let t = [targets.parallel, targets.perpendicular];

    let evaluate = |sigma: f64| -> Result<(f64, [f64; 2], f64)> {
        let det = DetectorModel { timing_jitter_sigma: sigma, ..DetectorModel::ideal() };
        let raw = [hom_g2(&a, &b_par, &det, &[0.0])?.g2[0], hom_g2(&a, &b_perp, &det, &[0.0])?.g2[0]];
        let num: f64 = (0..2).map(|k| w[k] * (t[k] - 1.0) * (raw[k] - 1.0)).sum();
        let den: f64 = (0..2).map(|k| w[k] * (raw[k] - 1.0).powi(2)).sum();
        let r = if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 1.0 };
        let model = [1.0 + r * (raw[0] - 1.0), 1.0 + r * (raw[1] - 1.0)];
        let chi2 = (0..2).map(|k| w[k] * (model[k] - t[k]).powi(2)).sum();
        Ok((r, model, chi2))
    };

    evaluate(0.0)?;
    let (sigma, _) = golden_min(|s| evaluate(s).map(|v| v.2).unwrap_or(f64::INFINITY), 0.0, sigma_max, 1e-4 * sigma_max);
    let (r, model, chi2) = evaluate(sigma)?;
    Ok(HomFit {
        jitter_sigma: sigma,
        background_fraction: 1.0 - r.sqrt(),
        signal_fraction_squared: r,
        g2_parallel: model[0],
        g2_perpendicular: model[1],
        chi_squared: chi2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanConfig {
    /// Drive detuning Δ from the optical transition, Hz.
    pub drive_detuning: f64,
    /// Optical transition frequency ν_ec, Hz.
    pub transition_frequency: f64,
    /// Control-field phase contribution to φ, rad.
    pub control_phase: f64,
    /// Drive Rabi frequency Ω, Hz.
    pub drive_rabi: f64,
}

impl RamanConfig {
    /// Raman photon frequency `ν_ec − Δ`.
    pub fn emission_frequency(&self) -> f64 {
        self.transition_frequency - self.drive_detuning
    }

    pub fn within_tuning_range(&self) -> bool {
        self.drive_detuning.abs() <= RAMAN_TUNING_RANGE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LineLabel {
    /// Spontaneous emission at the bare transition.
    S,
    /// Raman emission at `ν_ec − Δ`.
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralLine {
    pub label: LineLabel,
    /// Hz.
    pub center: f64,
    /// Lorentzian FWHM, Hz.
    pub width: f64,
    /// Relative weight; the two weights sum to 1.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RamanSpectrum {
    pub lines: [SpectralLine; 2],
    pub within_tuning_range: bool,
}

impl RamanSpectrum {
    /// Area-normalized spectral density at `frequency`, 1/Hz.
    pub fn density(&self, frequency: f64) -> f64 {
        self.lines
            .iter()
            .map(|l| {
                let hw = 0.5 * l.width;
                l.weight * hw / (PI * ((frequency - l.center).powi(2) + hw * hw))
            })
            .sum()
    }
}

/// Two-line emission spectrum under detuned driving.
///
/// The Raman line width is the optical-pumping rate `Ω²γ/(4Δ² + γ²)`
/// (angular units) expressed as an ordinary-frequency FWHM; the line weights
/// split by the radiative fraction of the optical linewidth.
pub fn raman_spectrum(config: &RamanConfig, emitter: &EmitterOpticalParams) -> Result<RamanSpectrum> {
    emitter.validate()?;
    if !(config.drive_rabi >= 0.0) || !config.drive_detuning.is_finite() || !config.transition_frequency.is_finite() {
        return Err(invalid("Raman drive must have finite detuning and non-negative Rabi frequency"));
    }
    let within = config.within_tuning_range();
    if !within {
        log::warn!(
            "Raman detuning {:.3} GHz is outside the ±{:.0} GHz tuning range",
            config.drive_detuning / 1e9,
            RAMAN_TUNING_RANGE / 1e9
        );
    }
    let gamma = emitter.total_linewidth();
    let (omega, delta, g) = (2.0 * PI * config.drive_rabi, 2.0 * PI * config.drive_detuning, 2.0 * PI * gamma);
    let pumping = omega * omega * g / (4.0 * delta * delta + g * g);
    let raman_weight = emitter.gamma_rad / gamma;
    Ok(RamanSpectrum {
        lines: [
            SpectralLine { label: LineLabel::S, center: config.transition_frequency, width: gamma, weight: 1.0 - raman_weight },
            SpectralLine {
                label: LineLabel::R,
                center: config.emission_frequency(),
                width: pumping / (2.0 * PI),
                weight: raman_weight,
            },
        ],
        within_tuning_range: within,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoEmitterWaveguide {
    /// Raman photon sources; their `frequency` is overridden by the Raman
    /// emission frequency of the matching config.
    pub sources: [SinglePhotonSource; 2],
    pub raman: [RamanConfig; 2],
    /// Total phase φ between the two emission paths, rad.
    pub relative_phase: f64,
    pub tuned: bool,
    /// Field coupling amplitudes of the emitters to the waveguide mode.
    pub couplings: [f64; 2],
}

impl TwoEmitterWaveguide {
    pub fn emission_frequencies(&self) -> [f64; 2] {
        [self.raman[0].emission_frequency(), self.raman[1].emission_frequency()]
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.sources {
            s.validate()?;
        }
        if self.couplings.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) || self.couplings.iter().all(|c| *c == 0.0) {
            return Err(invalid("couplings must be non-negative with at least one non-zero"));
        }
        if self.tuned {
            let [f1, f2] = self.emission_frequencies();
            let lw = self.sources[0].linewidth.min(self.sources[1].linewidth);
            if (f1 - f2).abs() > 1e-6 * lw {
                return Err(invalid(format!("tuned system has Raman lines {:.3e} Hz apart", f1 - f2)));
            }
        }
        Ok(())
    }

    /// Retunes emitter 2's drive so its Raman line coincides with emitter 1's.
    pub fn tuned_copy(&self) -> Self {
        let mut out = *self;
        out.raman[1].drive_detuning = self.raman[1].transition_frequency - self.raman[0].emission_frequency();
        out.tuned = true;
        out
    }

    fn placed_sources(&self) -> [SinglePhotonSource; 2] {
        let f = self.emission_frequencies();
        let mut s = self.sources;
        s[0].frequency = f[0];
        s[1].frequency = if self.tuned { f[0] } else { f[1] };
        s
    }
}

/// Detected `g²(τ)` of one source alone.
pub fn single_emitter_g2(source: &SinglePhotonSource, detector: &DetectorModel, taus: &[f64]) -> Result<Vec<f64>> {
    source.validate()?;
    detector.validate()?;
    let rho2 = signal_fraction(&[source], detector).powi(2);
    Ok(taus.iter().map(|&tau| 1.0 + rho2 * (detector.smear(|u| source.antibunching(u), tau) - 1.0)).collect())
}

/// Detected `g²(τ)` of the common waveguide mode fed by both emitters.
///
/// Tuned emitters interfere at zero beat frequency; untuned ones beat at the
/// Raman frequency difference, which the detector response averages out.
pub fn waveguide_g2(system: &TwoEmitterWaveguide, detector: &DetectorModel, taus: &[f64]) -> Result<Vec<f64>> {
    system.validate()?;
    detector.validate()?;
    let [s1, s2] = system.placed_sources();
    let rho2 = signal_fraction(&[&s1, &s2], detector).powi(2);
    let visibility = polarization_overlap(&s1, &s2);
    Ok(taus
        .iter()
        .map(|&tau| 1.0 + rho2 * (detector.smear(|u| two_source_correlation(&s1, &s2, 1.0, visibility, u).0, tau) - 1.0))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveguideCalibration {
    pub jitter_sigma: f64,
    /// Common background fraction (no dark counts).
    pub background_fraction: f64,
    pub g2_single: f64,
    pub g2_untuned: f64,
    /// Prediction for the tuned pair under the calibrated imperfections.
    pub g2_tuned: f64,
}

/// Fixes background and jitter so that the single-emitter and untuned-pair
/// zero-delay values hit their targets, then predicts the tuned pair.
///
/// For each jitter σ the background follows from the single-emitter target;
/// σ is then found by bisection on the untuned-pair residual.
pub fn calibrate_waveguide(
    system: &TwoEmitterWaveguide,
    single_target: f64,
    untuned_target: f64,
    sigma_max: f64,
) -> Result<WaveguideCalibration> {
    let mut untuned = *system;
    untuned.tuned = false;
    untuned.validate()?;
    for s in untuned.sources.iter_mut() {
        s.background_fraction = 0.0;
    }
    let with_background = |sys: &TwoEmitterWaveguide, bg: f64| {
        let mut out = *sys;
        for s in out.sources.iter_mut() {
            s.background_fraction = bg;
        }
        out
    };
    // Background fraction reproducing the single-emitter value at jitter σ.
    let background_for = |sigma: f64| -> Result<Option<f64>> {
        let det = DetectorModel { timing_jitter_sigma: sigma, ..DetectorModel::ideal() };
        let dip = 1.0 - single_emitter_g2(&untuned.sources[0], &det, &[0.0])?[0];
        let r = (1.0 - single_target) / dip;
        Ok((r <= 1.0).then(|| 1.0 - r.sqrt()))
    };
    let untuned_at = |sigma: f64| -> Result<Option<f64>> {
        let Some(bg) = background_for(sigma)? else { return Ok(None) };
        let det = DetectorModel { timing_jitter_sigma: sigma, ..DetectorModel::ideal() };
        Ok(Some(waveguide_g2(&with_background(&untuned, bg), &det, &[0.0])?[0]))
    };

    // Largest admissible σ (background fraction reaches zero), bracketed
    // from the admissible side.
    if background_for(0.0)?.is_none() {
        return Err(Error::Fit("single-emitter target unreachable at zero jitter".into()));
    }
    let sigma_hi = if background_for(sigma_max)?.is_some() {
        sigma_max
    } else {
        let (mut lo, mut hi) = (0.0, sigma_max);
        while hi - lo > 1e-9 * sigma_max {
            let mid = 0.5 * (lo + hi);
            if background_for(mid)?.is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mut failure = None;
    let sigma = bisect(
        |s| match untuned_at(s) {
            Ok(Some(v)) => v - untuned_target,
            Ok(None) => f64::NAN,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        sigma_hi,
        1e-7 * sigma_hi,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let sigma = sigma.ok_or_else(|| {
        Error::Fit(format!("untuned target {untuned_target} not bracketed for jitter in [0, {sigma_hi:.3e}] s"))
    })?;
    let bg = background_for(sigma)?.ok_or_else(|| Error::Fit("background out of range".into()))?;
    let det = DetectorModel { timing_jitter_sigma: sigma, ..DetectorModel::ideal() };
    let calibrated = with_background(&untuned, bg);
    Ok(WaveguideCalibration {
        jitter_sigma: sigma,
        background_fraction: bg,
        g2_single: single_emitter_g2(&calibrated.sources[0], &det, &[0.0])?[0],
        g2_untuned: waveguide_g2(&calibrated, &det, &[0.0])?[0],
        g2_tuned: waveguide_g2(&calibrated.tuned_copy(), &det, &[0.0])?[0],
    })
}

/// Emission rate of `(|eg⟩ + e^{iφ}|ge⟩)/√2` into the shared mode relative to
/// the mean single-emitter rate: `|c₁ + c₂ e^{iφ}|² / (c₁² + c₂²)`.
pub fn superradiant_rate(system: &TwoEmitterWaveguide) -> Result<f64> {
    system.validate()?;
    if !system.tuned {
        return Err(invalid("collective enhancement needs tuned (indistinguishable) emitters"));
    }
    let [c1, c2] = system.couplings;
    let amp = Complex64::new(c1, 0.0) + Complex64::from_polar(c2, system.relative_phase);
    Ok(amp.norm_sqr() / (c1 * c1 + c2 * c2))
}
