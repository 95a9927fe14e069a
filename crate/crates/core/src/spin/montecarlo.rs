use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::coherence::{finish_curve, CoherencePoint, CoherenceResult};
use super::noise::NoisePsd;
use super::sequence::{PulseSequence, SequenceKind};
use crate::error::{invalid, Result};

/// Linear mode spacing of the spectral synthesis, in units of π/T.
const LINEAR_SPACING: f64 = 1.0 / 16.0;
/// Linear modes cover `[0, LINEAR_SPAN·(N+1)π/T]`.
const LINEAR_SPAN: f64 = 64.0;
/// Log-spaced modes beyond the linear band, up to `LOG_SPAN·(N+1)π/T`.
const LOG_SPAN: f64 = 1.0e4;
const LOG_MODES: usize = 256;

/// `f(a)` in `Var ∫x = 2σ²τc² f(a)` for an OU segment of length `aτc`.
fn ou_integral_shape(a: f64) -> f64 {
    if a < 1e-3 {
        a * a * a * (1.0 / 3.0 - a / 4.0 + 7.0 * a * a / 60.0)
    } else {
        a + 2.0 * (-a).exp_m1() - 0.5 * (-2.0 * a).exp_m1()
    }
}

enum Sampler {
    Ou { sigma: f64, tau_c: f64, segments: Vec<(f64, f64, f64)> },
    Static { sigma: f64, area: f64 },
    /// Phase `Σ w_k (z_k Re Y_k + z'_k Im Y_k)`.
    Spectral { weights: Vec<(f64, f64)> },
}

impl Sampler {
    fn new(psd: &NoisePsd, kind: &SequenceKind, t: f64) -> Self {
        match *psd {
            NoisePsd::OrnsteinUhlenbeck { sigma, tau_c } => Sampler::Ou { sigma, tau_c, segments: kind.segments(t) },
            NoisePsd::QuasiStaticGaussian { sigma } => Sampler::Static { sigma, area: kind.area(t) },
            NoisePsd::PowerLaw { low_cutoff, high_cutoff, .. } => {
                let scale = PI / t;
                let reach = (kind.pulses() + 1) as f64 * scale;
                let linear_top = high_cutoff.min(LINEAR_SPAN * reach);
                let step = LINEAR_SPACING * scale;
                let mut cells = Vec::new();
                let mut w = low_cutoff;
                while w < linear_top {
                    let next = (w + step).min(linear_top);
                    cells.push((w, next));
                    w = next;
                }
                let log_top = high_cutoff.min(LOG_SPAN * reach);
                if log_top > linear_top {
                    let ratio = (log_top / linear_top).powf(1.0 / LOG_MODES as f64);
                    let mut w = linear_top;
                    for _ in 0..LOG_MODES {
                        cells.push((w, w * ratio));
                        w *= ratio;
                    }
                }
                let weights = cells
                    .into_iter()
                    .filter_map(|(a, b)| {
                        let mid = 0.5 * (a + b);
                        let amp = (psd.density(mid) * (b - a) / PI).sqrt();
                        (amp > 0.0).then(|| {
                            let y = kind.filter_amplitude(t, mid);
                            (amp * y.re, amp * y.im)
                        })
                    })
                    .collect();
                Sampler::Spectral { weights }
            }
        }
    }

    fn phase(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Static { sigma, area } => sigma * area * rng.sample::<f64, _>(StandardNormal),
            Sampler::Spectral { weights } => weights
                .iter()
                .map(|&(re, im)| re * rng.sample::<f64, _>(StandardNormal) + im * rng.sample::<f64, _>(StandardNormal))
                .sum(),
            Sampler::Ou { sigma, tau_c, segments } => {
                let (sigma, tau_c) = (*sigma, *tau_c);
                let var = sigma * sigma;
                let mut x = sigma * rng.sample::<f64, _>(StandardNormal);
                let mut phase = 0.0;
                for &(_, len, sign) in segments {
                    let a = len / tau_c;
                    let decay = (-a).exp();
                    let var_i = 2.0 * var * tau_c * tau_c * ou_integral_shape(a);
                    let cov = var * tau_c * (-a).exp_m1().powi(2);
                    let var_x = -var * (-2.0 * a).exp_m1();
                    let mean_i = x * tau_c * -(-a).exp_m1();
                    let integral = mean_i + var_i.sqrt() * rng.sample::<f64, _>(StandardNormal);
                    let (gain, resid) = if var_i > 0.0 {
                        (cov / var_i, (var_x - cov * cov / var_i).max(0.0))
                    } else {
                        (0.0, var_x)
                    };
                    x = x * decay + gain * (integral - mean_i) + resid.sqrt() * rng.sample::<f64, _>(StandardNormal);
                    phase += sign * integral;
                }
                phase
            }
        }
    }
}

fn trajectory_rng(seed: u64, point: usize, trajectory: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trajectory as u64);
    rng
}

/// Mean and standard error of `cos φ` at one sequence duration. Trajectory
/// `k` draws from its own ChaCha stream, so the result does not depend on
/// the thread count.
pub fn monte_carlo_point(psd: &NoisePsd, sequence: &PulseSequence, n_trajectories: usize, seed: u64) -> Result<(f64, f64)> {
    sample_point(psd, &sequence.kind, sequence.total_time, n_trajectories, seed, 0)
}

fn sample_point(psd: &NoisePsd, kind: &SequenceKind, t: f64, n: usize, seed: u64, point: usize) -> Result<(f64, f64)> {
    psd.validate()?;
    kind.validate()?;
    if n < 2 {
        return Err(invalid("Monte Carlo needs at least two trajectories"));
    }
    if n > u32::MAX as usize {
        return Err(invalid("too many trajectories"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("sequence duration must be finite and non-negative"));
    }
    if t == 0.0 {
        return Ok((1.0, 0.0));
    }
    let sampler = Sampler::new(psd, kind, t);
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| sampler.phase(&mut trajectory_rng(seed, point, k)).cos())
        .collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Brute-force coherence curve from sampled noise trajectories.
///
/// OU noise is propagated exactly segment by segment (joint Gaussian update
/// of the process and its integral). Power-law spectra are synthesized from
/// independent Fourier modes on a grid fine enough to resolve the filter.
pub fn monte_carlo_coherence(
    psd: &NoisePsd,
    kind: SequenceKind,
    taus: &[f64],
    n_trajectories: usize,
    seed: u64,
    t1: Option<f64>,
) -> Result<CoherenceResult> {
    if let Some(t1) = t1 {
        if !(t1 > 0.0) {
            return Err(invalid("T1 must be positive"));
        }
    }
    let mut curve = Vec::with_capacity(taus.len());
    for (i, &tau) in taus.iter().enumerate() {
        let (mean, stderr) = sample_point(psd, &kind, tau, n_trajectories, seed, i)?;
        let damping = t1.map_or(1.0, |t1| (-tau / (2.0 * t1)).exp());
        curve.push(CoherencePoint { tau, coherence: mean * damping, fringe: None, stderr: Some(stderr * damping) });
    }
    finish_curve(kind, curve, None)
}
