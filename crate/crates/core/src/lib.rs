//! Simulation kernels for silicon-vacancy centers in diamond nanophotonics.
//!
//! The crate is layered bottom-up:
//!
//! * [`qdyn`] is a generic dense open-system kernel (Hilbert spaces, Lindblad
//!   evolution, steady states, two-time correlations).
//! * [`siv`] holds the SiV ground-state Hamiltonian and electron-phonon rates.
//! * [`cavity`] covers emitter-cavity transmission and photon statistics.
//! * [`interference`] models two-photon interference and two-emitter
//!   collective emission into a waveguide.
//! * [`spin`] evaluates Ramsey/CPMG coherence under classical dephasing noise.
//!
//! Frequencies in parameter records are ordinary frequencies in Hz (the
//! `ν = ω/2π` values quoted by experiments). Operators and Liouvillians carry
//! angular frequencies in rad/s; conversion happens where models are built.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cavity;
pub mod error;
pub mod interference;
pub mod numeric;
pub mod qdyn;
pub mod siv;
pub mod spin;
pub mod units;

pub use error::{Error, Result};
