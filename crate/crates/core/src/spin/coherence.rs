use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fit::stretched_exponential_t2;
use super::noise::NoisePsd;
use super::sequence::SequenceKind;
use crate::error::{invalid, Error, Result};
use crate::numeric::{bracket_log_root, integrate};

/// Beyond `BAND_FACTOR·(N+1)π/T` the filter is replaced by its average.
const BAND_FACTOR: f64 = 100.0;
const QUAD_RTOL: f64 = 1e-10;
/// Accepted quadrature error relative to the value.
const QUAD_ACCEPT: f64 = 1e-6;
/// Root tolerance on `ln T2`.
const T2_LOG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherencePoint {
    pub tau: f64,
    /// `|⟨σ+⟩|` normalized to 1 at τ = 0.
    pub coherence: f64,
    /// Ramsey population fringe `(1 + C cos 2πδτ)/2`.
    pub fringe: Option<f64>,
    /// Monte-Carlo standard error.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceResult {
    pub sequence: SequenceKind,
    pub decay_curve: Vec<CoherencePoint>,
    /// 1/e time of the stretched exponential fitted to `decay_curve`.
    pub t2: f64,
    /// Stretch exponent of that fit.
    pub stretch: f64,
    /// Exact 1/e crossing of the filter-function envelope.
    pub t2_exact: Option<f64>,
}

fn check_convergence(psd: &NoisePsd, kind: &SequenceKind) -> Result<()> {
    if let NoisePsd::PowerLaw { exponent, low_cutoff, high_cutoff, .. } = *psd {
        let ir_limit = if kind.pulses() == 0 { 1.0 } else { 3.0 };
        if low_cutoff == 0.0 && exponent >= ir_limit {
            return Err(Error::NonConvergentIntegral(format!(
                "power law ω^-{exponent} diverges at ω → 0 for this sequence; set a low cutoff"
            )));
        }
        if high_cutoff.is_infinite() && exponent <= -1.0 {
            return Err(Error::NonConvergentIntegral(format!(
                "power law ω^-{exponent} diverges at ω → ∞; set a high cutoff"
            )));
        }
    }
    Ok(())
}

/// `χ(T)`; coherence is `e^{−χ}`.
pub fn decoherence_functional(psd: &NoisePsd, kind: &SequenceKind, total_time: f64) -> Result<f64> {
    psd.validate()?;
    kind.validate()?;
    if !(total_time >= 0.0) || !total_time.is_finite() {
        return Err(invalid("sequence duration must be finite and non-negative"));
    }
    check_convergence(psd, kind)?;
    if total_time == 0.0 {
        return Ok(0.0);
    }
    let area = kind.area(total_time);
    let mut chi = 0.5 * psd.static_variance() * area * area;

    let (lo, hi) = psd.band();
    if hi > lo {
        let scale = PI / total_time;
        // All jump-time differences are multiples of T/2N; a band edge at a
        // multiple of 4πN/T cancels the leading oscillating tail terms.
        let n = kind.pulses() as f64;
        let unit = if n == 0.0 { 2.0 * scale } else { 4.0 * n * scale };
        let band = (BAND_FACTOR * (n + 1.0) * scale / unit).ceil() * unit;
        let upper = hi.min(band);
        let mut total = 0.0;
        let mut error = 0.0;
        if upper > lo {
            let first = (lo / scale).floor() as usize + 1;
            let last = (upper / scale).ceil() as usize;
            let breaks: Vec<f64> = (first..last).map(|k| k as f64 * scale).collect();
            let q = integrate(
                |w| psd.density(w) * kind.filter_amplitude(total_time, w).norm_sqr(),
                lo,
                upper,
                &breaks,
                QUAD_RTOL,
                0.0,
            );
            total += q.value;
            error += q.error;
        }
        if hi > upper {
            // ∫_U^hi S(ω) J/ω² dω with ω = U/u.
            let start = lo.max(upper);
            let weight = kind.jump_weight() / start;
            let q = integrate(|u| psd.density(start / u), start / hi, 1.0, &[], QUAD_RTOL, 0.0);
            total += weight * q.value;
            error += weight * q.error;
        }
        if error > QUAD_ACCEPT * total.abs() + f64::MIN_POSITIVE {
            return Err(Error::NonConvergentIntegral(format!(
                "filter-function integral error {error:.3e} against value {total:.3e}"
            )));
        }
        chi += total / (2.0 * PI);
    }
    Ok(chi)
}

/// `e^{−χ(T) − T/(2T1)}`.
pub fn coherence_at(psd: &NoisePsd, kind: &SequenceKind, total_time: f64, t1: Option<f64>) -> Result<f64> {
    let chi = decoherence_functional(psd, kind, total_time)?;
    Ok((-chi - t1_decay(total_time, t1)?).exp())
}

fn t1_decay(total_time: f64, t1: Option<f64>) -> Result<f64> {
    match t1 {
        None => Ok(0.0),
        Some(t1) if t1 > 0.0 => Ok(total_time / (2.0 * t1)),
        Some(_) => Err(invalid("T1 must be positive")),
    }
}

fn typical_time(psd: &NoisePsd) -> f64 {
    match *psd {
        NoisePsd::OrnsteinUhlenbeck { sigma, .. } | NoisePsd::QuasiStaticGaussian { sigma } if sigma > 0.0 => 1.0 / sigma,
        NoisePsd::PowerLaw { high_cutoff, .. } if high_cutoff.is_finite() => 1.0 / high_cutoff,
        _ => 1e-6,
    }
}

/// Time at which the envelope falls to 1/e. Infinite when nothing decoheres.
pub fn filter_t2(psd: &NoisePsd, kind: &SequenceKind, t1: Option<f64>) -> Result<f64> {
    t1_decay(0.0, t1)?;
    let silent = match *psd {
        NoisePsd::OrnsteinUhlenbeck { sigma, .. } | NoisePsd::QuasiStaticGaussian { sigma } => sigma == 0.0,
        NoisePsd::PowerLaw { amplitude, .. } => amplitude == 0.0,
    };
    let static_only = matches!(psd, NoisePsd::QuasiStaticGaussian { .. }) && kind.pulses() > 0;
    if t1.is_none() && (silent || static_only) {
        psd.validate()?;
        return Ok(f64::INFINITY);
    }
    let mut failure = None;
    let root = bracket_log_root(
        |t| match decoherence_functional(psd, kind, t) {
            Ok(chi) => chi + t1_decay(t, t1).unwrap_or(0.0) - 1.0,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        typical_time(psd),
        4.0,
        T2_LOG_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    root.ok_or_else(|| Error::NonConvergentIntegral("could not bracket the 1/e time".into()))
}

pub(crate) fn finish_curve(kind: SequenceKind, decay_curve: Vec<CoherencePoint>, t2_exact: Option<f64>) -> Result<CoherenceResult> {
    let taus: Vec<f64> = decay_curve.iter().map(|p| p.tau).collect();
    let values: Vec<f64> = decay_curve.iter().map(|p| p.coherence).collect();
    let fit = stretched_exponential_t2(&taus, &values)?;
    Ok(CoherenceResult { sequence: kind, decay_curve, t2: fit.t2, stretch: fit.stretch, t2_exact })
}

fn filter_curve(psd: &NoisePsd, kind: SequenceKind, taus: &[f64], detuning: Option<f64>, t1: Option<f64>) -> Result<CoherenceResult> {
    let mut curve = Vec::with_capacity(taus.len());
    for &tau in taus {
        let coherence = coherence_at(psd, &kind, tau, t1)?;
        let fringe = detuning.map(|d| 0.5 * (1.0 + coherence * (2.0 * PI * d * tau).cos()));
        curve.push(CoherencePoint { tau, coherence, fringe, stderr: None });
    }
    let t2_exact = filter_t2(psd, &kind, t1)?;
    finish_curve(kind, curve, t2_exact.is_finite().then_some(t2_exact))
}

/// Ramsey free-induction decay with a fringe at `detuning` (Hz).
pub fn ramsey_decay(psd: &NoisePsd, detuning: f64, taus: &[f64], t1: Option<f64>) -> Result<CoherenceResult> {
    filter_curve(psd, SequenceKind::Ramsey, taus, Some(detuning), t1)
}

/// CPMG-`n` coherence against total sequence time.
pub fn cpmg_coherence(psd: &NoisePsd, n: u32, taus: &[f64], t1: Option<f64>) -> Result<CoherenceResult> {
    filter_curve(psd, SequenceKind::Cpmg { n }, taus, None, t1)
}
