use super::model::{frobenius, unvectorize, LindbladModel};
use super::space::{c, CMatrix, CVector};
use super::state::DensityMatrix;
use crate::error::{Error, Result};

/// Residual bound `‖L(ρ)‖ < STEADY_RESIDUAL_TOL · ‖L‖`.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-9;
/// Required separation between the two smallest Liouvillian singular values.
pub const UNIQUENESS_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateOptions {
    /// Verify a one-dimensional null space with a full singular-value
    /// decomposition. Costs O(n⁶) in the Hilbert dimension.
    pub check_uniqueness: bool,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { check_uniqueness: true }
    }
}

/// Unique stationary state of `model`.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    steady_state_with(model, SteadyStateOptions::default())
}

/// Null vector of the Liouvillian with trace normalization.
///
/// One row of `L` is replaced by the (rescaled) trace functional and the
/// bordered system is solved by LU with one refinement step.
pub fn steady_state_with(model: &LindbladModel, options: SteadyStateOptions) -> Result<DensityMatrix> {
    let n = model.dimension();
    let l = model.liouvillian();
    let l_norm = frobenius(&l);
    if l_norm == 0.0 {
        return Err(Error::DegenerateSteadyState { ratio: 1.0 });
    }

    if options.check_uniqueness {
        let mut sv: Vec<f64> = l.singular_values().iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        let floor = sv[0].max(1e-14 * l_norm);
        let ratio = sv.get(1).copied().unwrap_or(f64::INFINITY) / floor;
        if ratio <= UNIQUENESS_RATIO {
            return Err(Error::DegenerateSteadyState { ratio });
        }
    }

    let scale = l_norm / n as f64;
    let mut bordered = l.clone();
    for col in 0..n * n {
        bordered[(0, col)] = c(0.0);
    }
    for k in 0..n {
        bordered[(0, k * (n + 1))] = c(scale);
    }
    let mut rhs = CVector::zeros(n * n);
    rhs[0] = c(scale);
    let lu = bordered.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(Error::DegenerateSteadyState { ratio: 0.0 })?;
    let r = &rhs - &bordered * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DegenerateSteadyState { ratio: 0.0 });
    }

    let m = unvectorize(&x, n);
    let m: CMatrix = (&m + m.adjoint()) * c(0.5);
    let tr = m.trace().re;
    let m = m / c(tr);
    let residual = frobenius(&model.apply(&m)) / l_norm;
    if residual > STEADY_RESIDUAL_TOL {
        return Err(Error::SteadyStateResidual { residual });
    }
    DensityMatrix::from_matrix_unchecked(model.space().clone(), m)
}

/// `‖L(ρ)‖ / ‖L‖`, the relative stationarity residual of `rho`.
pub fn stationarity_residual(model: &LindbladModel, rho: &DensityMatrix) -> f64 {
    let l_norm = frobenius(&model.liouvillian());
    if l_norm == 0.0 {
        return 0.0;
    }
    frobenius(&model.apply(rho.matrix())) / l_norm
}
