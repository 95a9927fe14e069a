//! Dense open-quantum-system kernel.
//!
//! States and operators are dense complex matrices over a [`HilbertSpace`].
//! Dynamics follow the Lindblad master equation, vectorized by column
//! stacking. Models here stay small (Liouvillian dimension of a few hundred),
//! so every solver works on the full superoperator.

mod correlation;
mod evolve;
mod model;
mod space;
mod state;
mod steady;

pub use correlation::{g2, two_time_correlation, STATIONARITY_TOL};
pub use evolve::{evolve_master, propagator, PROPAGATOR_ATOL, PROPAGATOR_RTOL};
pub use model::{Channel, LindbladModel};
pub use space::{ops, tensor_product, CMatrix, CVector, HilbertSpace, Operator};
pub use state::{DensityMatrix, TimeGrid};
pub use steady::{
    stationarity_residual, steady_state, steady_state_with, SteadyStateOptions, STEADY_RESIDUAL_TOL,
    UNIQUENESS_RATIO,
};
