use serde::{Deserialize, Serialize};

use super::space::{c, CMatrix, CVector, HilbertSpace, Operator};
use crate::error::{invalid, Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates all invariants.
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(space, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape-checked only; used for solver outputs whose invariants are
    /// asserted by the solver's own tolerances.
    pub(crate) fn from_matrix_unchecked(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.dimension();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    pub fn pure(space: HilbertSpace, psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi / c(norm);
        let matrix = &psi * psi.adjoint();
        Self::new(space, matrix)
    }

    /// `|levels⟩⟨levels|` for a product basis state.
    pub fn basis(space: &HilbertSpace, levels: &[usize]) -> Result<Self> {
        let n = space.dimension();
        let idx = space.index_of(levels)?;
        let mut m = CMatrix::zeros(n, n);
        m[(idx, idx)] = c(1.0);
        Ok(Self { space: space.clone(), matrix: m })
    }

    /// Diagonal state with the given populations (normalized).
    pub fn diagonal(space: &HilbertSpace, populations: &[f64]) -> Result<Self> {
        let n = space.dimension();
        if populations.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: populations.len() });
        }
        let total: f64 = populations.iter().sum();
        if total <= 0.0 || populations.iter().any(|p| *p < 0.0) {
            return Err(invalid("populations must be non-negative with positive sum"));
        }
        let m = CMatrix::from_fn(n, n, |i, j| if i == j { c(populations[i] / total) } else { c(0.0) });
        Self::new(space.clone(), m)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    pub fn purity(&self) -> f64 {
        super::space::trace_of_product(&self.matrix, &self.matrix).re
    }

    pub fn expect(&self, op: &Operator) -> num_complex::Complex64 {
        op.expect(self)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:.2e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_ev:.3e}")));
        }
        Ok(())
    }
}

/// Uniform time grid `start..=stop` with `n_points` samples (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, n_points: usize) -> Result<Self> {
        if !(start >= 0.0) || !(stop > start) || !stop.is_finite() {
            return Err(invalid(format!("time grid needs stop > start >= 0 (got {start}..{stop})")));
        }
        if n_points < 2 {
            return Err(invalid("time grid needs at least 2 points"));
        }
        Ok(Self { start, stop, n_points })
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let dt = self.step();
        (0..self.n_points).map(|k| self.start + dt * k as f64).collect()
    }
}
