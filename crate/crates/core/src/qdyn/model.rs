use super::space::{c, CMatrix, CVector, HilbertSpace, Operator, I};
use crate::error::{invalid, Error, Result};

/// A collapse operator with a non-negative rate (1/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub operator: Operator,
    pub rate: f64,
}

impl Channel {
    pub fn new(operator: Operator, rate: f64) -> Self {
        Self { operator, rate }
    }
}

/// Hamiltonian (rad/s) plus weighted collapse channels:
/// `dρ/dt = -i[H, ρ] + Σ γ_k (L_k ρ L_k† - ½{L_k† L_k, ρ})`.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: Operator,
    channels: Vec<Channel>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Operator, channels: Vec<Channel>) -> Result<Self> {
        if !hamiltonian.is_hermitian(1e-10) {
            return Err(invalid(format!(
                "Hamiltonian is not Hermitian (error {:.2e})",
                hamiltonian.hermiticity_error()
            )));
        }
        for ch in &channels {
            if ch.operator.space() != hamiltonian.space() {
                return Err(Error::DimensionMismatch {
                    expected: hamiltonian.dimension(),
                    found: ch.operator.dimension(),
                });
            }
            if !(ch.rate >= 0.0) || !ch.rate.is_finite() {
                return Err(invalid(format!("collapse rate must be finite and non-negative, got {}", ch.rate)));
            }
        }
        Ok(Self { hamiltonian, channels })
    }

    pub fn space(&self) -> &HilbertSpace {
        self.hamiltonian.space()
    }

    pub fn dimension(&self) -> usize {
        self.hamiltonian.dimension()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Superoperator acting on column-stacked `vec(ρ)`, using
    /// `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
    pub fn liouvillian(&self) -> CMatrix {
        let n = self.dimension();
        let id = CMatrix::identity(n, n);
        let h = self.hamiltonian.matrix();
        let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I);
        for ch in self.channels.iter().filter(|ch| ch.rate > 0.0) {
            let op = ch.operator.matrix();
            let op_dag_op = op.adjoint() * op;
            let jump = op.conjugate().kronecker(op);
            let anti = id.kronecker(&op_dag_op) + op_dag_op.transpose().kronecker(&id);
            l += (jump - anti * c(0.5)) * c(ch.rate);
        }
        l
    }

    /// `L(ρ)` evaluated directly in matrix form.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let h = self.hamiltonian.matrix();
        let mut out = (h * rho - rho * h) * (-I);
        for ch in self.channels.iter().filter(|ch| ch.rate > 0.0) {
            let op = ch.operator.matrix();
            let op_dag = op.adjoint();
            let op_dag_op = &op_dag * op;
            let term = op * rho * &op_dag - (&op_dag_op * rho + rho * &op_dag_op) * c(0.5);
            out += term * c(ch.rate);
        }
        out
    }
}

pub(crate) fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub(crate) fn unvectorize(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

pub(crate) fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
