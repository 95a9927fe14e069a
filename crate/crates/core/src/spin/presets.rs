use std::f64::consts::PI;

use super::coherence::{decoherence_functional, filter_t2};
use super::noise::NoisePsd;
use super::sequence::SequenceKind;
use crate::error::{invalid, Error, Result};
use crate::numeric::{bisect, line_fit, LineFit};
use crate::siv::EmpiricalOrbitalRate;

/// Decoupling orders used for the scaling fits.
pub const REFERENCE_CPMG_ORDERS: [u32; 6] = [1, 2, 4, 8, 16, 32];

pub const NOISE_PRESET_NAMES: [&str; 4] = ["natural-abundance", "isotope-purified", "ou-slow-bath", "linear-scaling"];

/// Noise models by name.
///
/// * `natural-abundance`, `isotope-purified`: static Gaussian detuning with
///   `T2* = 300 ns` and `4 µs`.
/// * `ou-slow-bath`: OU noise with a correlation time far beyond every T2,
///   the regime where `T2 ∝ N^{2/3}`.
/// * `linear-scaling`: a fitted spectrum reproducing `T2 ∝ N^{1.02}` with
///   `T2(32) ≈ 13 ms`. It is a fit target, not a claim about the bath.
pub fn noise_preset(name: &str) -> Result<NoisePsd> {
    Ok(match name {
        "natural-abundance" => NoisePsd::QuasiStaticGaussian { sigma: 2f64.sqrt() / 300e-9 },
        "isotope-purified" => NoisePsd::QuasiStaticGaussian { sigma: 2f64.sqrt() / 4e-6 },
        "ou-slow-bath" => NoisePsd::OrnsteinUhlenbeck { sigma: OU_SLOW_SIGMA, tau_c: OU_SLOW_TAU_C },
        "linear-scaling" => NoisePsd::PowerLaw {
            amplitude: LINEAR_AMPLITUDE,
            exponent: 0.0,
            low_cutoff: 0.0,
            high_cutoff: LINEAR_CUTOFF,
        },
        other => return Err(invalid(format!("unknown noise preset '{other}'"))),
    })
}

/// Gives a Hahn-echo T2 of 1 ms; τ_c stays 1000× beyond T2(32).
const OU_SLOW_SIGMA: f64 = 3.46e5;
const OU_SLOW_TAU_C: f64 = 10.0;
/// Output of `fit_linear_scaling_psd(1.02, 13e-3, 32)`.
const LINEAR_AMPLITUDE: f64 = 342_749.950_444_222_95;
const LINEAR_CUTOFF: f64 = 3_622.980_162_023_500_3;

/// Spin T1 limited by phonon-driven orbital excitation at `temperature`.
pub fn t1_from_orbital(temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(invalid("temperature must be positive"));
    }
    Ok(EmpiricalOrbitalRate::default().upward_lifetime(temperature))
}

/// Least-squares slope of `ln T2` against `ln N` over [`REFERENCE_CPMG_ORDERS`].
fn family_fit(psd: &NoisePsd) -> Result<LineFit> {
    let mut x = Vec::with_capacity(REFERENCE_CPMG_ORDERS.len());
    let mut y = Vec::with_capacity(REFERENCE_CPMG_ORDERS.len());
    for &n in &REFERENCE_CPMG_ORDERS {
        x.push((n as f64).ln());
        y.push(filter_t2(psd, &SequenceKind::Cpmg { n }, None)?.ln());
    }
    Ok(line_fit(&x, &y).expect("distinct orders"))
}

/// Band-limited white spectrum with `T2(n_ref) = t2_ref` exactly.
fn pinned_white(cutoff: f64, t2_ref: f64, n_ref: u32) -> Result<NoisePsd> {
    let unit = NoisePsd::PowerLaw { amplitude: 1.0, exponent: 0.0, low_cutoff: 0.0, high_cutoff: cutoff };
    let chi = decoherence_functional(&unit, &SequenceKind::Cpmg { n: n_ref }, t2_ref)?;
    Ok(NoisePsd::PowerLaw { amplitude: 1.0 / chi, exponent: 0.0, low_cutoff: 0.0, high_cutoff: cutoff })
}

/// Fits a band-limited white spectrum (amplitude and sharp high cutoff) so
/// that the CPMG family over [`REFERENCE_CPMG_ORDERS`] scales as `N^beta` with
/// `T2(n_ref) = t2_ref`.
///
/// With the cutoff below the `n_ref` filter peak `π n_ref / t2_ref`, every
/// order sees only its low-frequency leakage and T2 grows almost linearly in
/// N. The cutoff is scanned over `[0.2, 0.95]` of that peak, and the first
/// Every bracket crossing the target exponent is bisected, and the root
/// whose `T2(N)` is closest to a pure power law (largest R²) is kept.
pub fn fit_linear_scaling_psd(beta: f64, t2_ref: f64, n_ref: u32) -> Result<NoisePsd> {
    if !(beta > 0.0) || !(t2_ref > 0.0) || n_ref == 0 {
        return Err(invalid("scaling target needs β > 0, T2 > 0 and N ≥ 1"));
    }
    let peak = PI * n_ref as f64 / t2_ref;
    let residual = |cutoff: f64| -> Result<f64> { Ok(family_fit(&pinned_white(cutoff, t2_ref, n_ref)?)?.slope - beta) };
    let grid: Vec<f64> = (0..=24).map(|k| peak * (0.2 + 0.75 * k as f64 / 24.0)).collect();
    let mut best: Option<(f64, NoisePsd)> = None;
    let mut prev = (grid[0], residual(grid[0])?);
    for &cutoff in &grid[1..] {
        let r = residual(cutoff)?;
        if prev.1.signum() != r.signum() {
            let mut failure = None;
            let root = bisect(
                |c| residual(c).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    f64::NAN
                }),
                prev.0,
                cutoff,
                1e-6 * peak,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            if let Some(root) = root {
                let psd = pinned_white(root, t2_ref, n_ref)?;
                let quality = family_fit(&psd)?.r_squared;
                if best.as_ref().is_none_or(|(q, _)| quality > *q) {
                    best = Some((quality, psd));
                }
            }
        }
        prev = (cutoff, r);
    }
    if let Some((_, psd)) = best {
        return Ok(psd);
    }
    Err(Error::Fit(format!("no band-limited white spectrum reaches β = {beta}")))
}
