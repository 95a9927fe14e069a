use num_complex::Complex64;

use super::evolve::propagator;
use super::model::{unvectorize, vectorize, LindbladModel};
use super::space::{trace_of_product, Operator};
use super::state::{DensityMatrix, TimeGrid};
use super::steady::stationarity_residual;
use crate::error::{Error, Result};

/// Stationarity required of the input state, relative to `‖L‖`.
pub const STATIONARITY_TOL: f64 = 1e-8;

/// `G(τ) = Tr[B e^{Lτ}(A ρ A†)]` on `taugrid` (quantum regression theorem).
///
/// With `A = a` and `B = a†a` this is the unnormalized intensity
/// correlation `⟨a†(0) a†(τ) a(τ) a(0)⟩`.
pub fn two_time_correlation(
    model: &LindbladModel,
    rho_ss: &DensityMatrix,
    a: &Operator,
    b: &Operator,
    taugrid: &TimeGrid,
) -> Result<Vec<Complex64>> {
    let n = model.dimension();
    for op in [a, b] {
        if op.space() != model.space() {
            return Err(Error::DimensionMismatch { expected: n, found: op.dimension() });
        }
    }
    let residual = stationarity_residual(model, rho_ss);
    if residual > STATIONARITY_TOL {
        return Err(Error::NonStationary { residual });
    }
    let l = model.liouvillian();
    let conditioned = a.matrix() * rho_ss.matrix() * a.matrix().adjoint();
    let mut v = vectorize(&conditioned);
    if taugrid.start > 0.0 {
        v = propagator(&l, taugrid.start)? * v;
    }
    let step = propagator(&l, taugrid.step())?;
    let mut out = Vec::with_capacity(taugrid.n_points);
    for k in 0..taugrid.n_points {
        if k > 0 {
            v = &step * &v;
        }
        out.push(trace_of_product(b.matrix(), &unvectorize(&v, n)));
    }
    Ok(out)
}

/// Normalized `g²(τ) = ⟨a†a†(τ)a(τ)a⟩ / ⟨a†a⟩²`.
pub fn g2(model: &LindbladModel, rho_ss: &DensityMatrix, a: &Operator, taugrid: &TimeGrid) -> Result<Vec<f64>> {
    let number = &a.dag() * a;
    let mean = number.expect(rho_ss).re;
    if !(mean > 0.0) {
        return Err(Error::InvalidState("⟨a†a⟩ vanishes; g² undefined".into()));
    }
    let g = two_time_correlation(model, rho_ss, a, &number, taugrid)?;
    Ok(g.iter().map(|z| z.re / (mean * mean)).collect())
}
