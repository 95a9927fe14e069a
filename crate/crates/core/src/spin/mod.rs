//! Spin-qubit coherence under classical dephasing noise.
//!
//! The qubit frequency fluctuates as `δω(t)`, a zero-mean Gaussian process
//! with two-sided spectrum `S(ω)`. A sequence of ideal π pulses flips the
//! sign of the accumulated phase, giving a toggling function `y(t) = ±1` and
//! coherence `e^{−χ}` with
//!
//! `χ(T) = (1/2π) ∫₀^∞ S(ω) |Y(ω)|² dω`,  `Y(ω) = ∫₀^T y(t) e^{iωt} dt`.
//!
//! [`monte_carlo_coherence`] samples the same processes in the time domain
//! and serves as an independent check of the filter-function integrals.

mod coherence;
mod fit;
mod montecarlo;
mod noise;
mod presets;
mod rabi;
mod sequence;

pub use coherence::{coherence_at, cpmg_coherence, decoherence_functional, filter_t2, ramsey_decay, CoherencePoint, CoherenceResult};
pub use fit::{stretched_exponential_t2, t2_scaling_fit, ScalingFit, StretchedFit};
pub use montecarlo::{monte_carlo_coherence, monte_carlo_point};
pub use noise::NoisePsd;
pub use presets::{fit_linear_scaling_psd, noise_preset, t1_from_orbital, NOISE_PRESET_NAMES, REFERENCE_CPMG_ORDERS};
pub use rabi::{rabi_trajectory, rabi_with_relaxation, SpinQubitParams};
pub use sequence::{PulseSequence, SequenceKind};
