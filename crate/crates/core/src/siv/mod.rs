//! SiV⁻ ground-state structure and single-phonon orbital relaxation.
//!
//! The ground state is an orbital doublet `{e₊, e₋}` times a spin-½, split by
//! spin-orbit coupling into a lower (LB) and upper (UB) branch. Acoustic
//! phonons resonant with the branch gap drive transitions LB ⇄ UB at rates
//! `γ₊ = 2πχρΔ³ n(Δ, T)` and `γ₋ = 2πχρΔ³ (n + 1)`.

mod ensemble;
mod hamiltonian;
mod params;
mod phonon;
mod presets;
mod relaxation;

pub use ensemble::sample_inhomogeneous_ensemble;
pub use hamiltonian::{ground_hamiltonian, ground_splitting, orbital_splitting};
pub use params::{EmitterOpticalParams, PhononBathParams, SivLevelParams, TransitionRates};
pub use phonon::{
    bose_occupation, calibrate_coupling, fit_delta_from_line_ratio, linear_rate_approx, phonon_rates,
    thermal_line_ratio, EmpiricalOrbitalRate, LineRatioFit,
};
pub use presets::{preset, SivPreset, PRESET_NAMES, REFERENCE_RELAXATION_TIME, REFERENCE_TEMPERATURE};
pub use relaxation::{orbital_relaxation_trajectory, Branch, BranchPopulations};
