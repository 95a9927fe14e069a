//! Physical constants (SI, exact 2019 values where defined) and unit helpers.

use std::f64::consts::PI;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

pub const GHZ: f64 = 1e9;
pub const MHZ: f64 = 1e6;
pub const KHZ: f64 = 1e3;
pub const NS: f64 = 1e-9;
pub const US: f64 = 1e-6;
pub const MS: f64 = 1e-3;
pub const PS: f64 = 1e-12;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Angular frequency (rad/s) to ordinary frequency (Hz).
#[inline]
pub fn ordinary(rad_per_s: f64) -> f64 {
    rad_per_s / (2.0 * PI)
}

/// `hν / k_B` in kelvin.
#[inline]
pub fn frequency_to_kelvin(hz: f64) -> f64 {
    PLANCK * hz / BOLTZMANN
}

/// Gaussian FWHM to standard deviation.
#[inline]
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}
