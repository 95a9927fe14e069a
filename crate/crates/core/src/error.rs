use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tensor product needs at least one factor")]
    EmptyFactorList,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("integrator failed to reach tolerance: {0}")]
    IntegratorFailure(String),

    #[error("steady state is not unique (second/smallest singular value ratio {ratio:.3e})")]
    DegenerateSteadyState { ratio: f64 },

    #[error("steady-state solve did not converge: residual {residual:.3e}")]
    SteadyStateResidual { residual: f64 },

    #[error("state is not stationary under the model: relative residual {residual:.3e}")]
    NonStationary { residual: f64 },

    #[error("Fock cutoff did not converge below {max_cutoff} levels")]
    FockCutoff { max_cutoff: usize },

    #[error("noise integral does not converge: {0}")]
    NonConvergentIntegral(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
