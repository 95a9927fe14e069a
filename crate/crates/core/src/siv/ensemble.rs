use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::params::EmitterOpticalParams;
use crate::error::{invalid, Result};
use crate::units::fwhm_to_sigma;

/// ZPL frequencies (Hz) drawn from a Gaussian of FWHM
/// `inhomogeneous_width` about `zpl_frequency`. Deterministic in `seed`.
pub fn sample_inhomogeneous_ensemble(params: &EmitterOpticalParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("ensemble size must be at least 1"));
    }
    params.validate()?;
    let sigma = fwhm_to_sigma(params.inhomogeneous_width);
    if sigma == 0.0 {
        return Ok(vec![params.zpl_frequency; n]);
    }
    let normal = Normal::new(params.zpl_frequency, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
}
