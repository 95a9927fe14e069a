use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Ordered list of subsystem dimensions.
///
/// Subsystem 0 is the slowest-varying index of the composite basis, so the
/// basis state `|i0, i1, ..⟩` sits at row `((i0 * d1) + i1) * d2 + ..`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(invalid("Hilbert space needs at least one subsystem"));
        }
        if dims.contains(&0) {
            return Err(invalid("subsystem dimensions must be positive"));
        }
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        HilbertSpace { dims }
    }

    /// Flat basis index of a product state.
    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), found: levels.len() });
        }
        let mut idx = 0;
        for (&l, &d) in levels.iter().zip(&self.dims) {
            if l >= d {
                return Err(invalid(format!("level {l} out of range for dimension {d}")));
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join("⊗"))
    }
}

/// Dense operator on a composite space. Energies are angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.dimension();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { space, matrix })
    }

    /// Operator on a single subsystem of dimension `matrix.nrows()`.
    pub fn local(matrix: CMatrix) -> Result<Self> {
        let space = HilbertSpace::single(matrix.nrows())?;
        Self::new(space, matrix)
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let n = space.dimension();
        Self { space: space.clone(), matrix: CMatrix::identity(n, n) }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let n = space.dimension();
        Self { space: space.clone(), matrix: CMatrix::zeros(n, n) }
    }

    /// Lifts a single-subsystem operator into `space` at position `index`.
    pub fn embed(space: &HilbertSpace, index: usize, local: &Operator) -> Result<Self> {
        let dims = space.dims();
        if index >= dims.len() {
            return Err(invalid(format!("subsystem index {index} out of range")));
        }
        if local.dimension() != dims[index] {
            return Err(Error::DimensionMismatch { expected: dims[index], found: local.dimension() });
        }
        let factors: Vec<Operator> = dims
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                if k == index {
                    local.clone()
                } else {
                    Operator::identity(&HilbertSpace { dims: vec![d] })
                }
            })
            .collect();
        let mut op = tensor_product(&factors)?;
        op.space = space.clone();
        Ok(op)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dag(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * c(factor) }
    }

    pub fn scale_complex(&self, factor: Complex64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * factor }
    }

    /// Largest entry of `|A - A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hermitian within `tol` relative to the largest entry (absolute below 1).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        self.hermiticity_error() <= tol * scale
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr[A ρ]`.
    pub fn expect(&self, rho: &super::DensityMatrix) -> Complex64 {
        trace_of_product(&self.matrix, rho.matrix())
    }

    fn check_same_space(&self, other: &Operator) {
        assert_eq!(self.space, other.space, "operator spaces differ: {} vs {}", self.space, other.space);
    }
}

pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.check_same_space(rhs);
        Operator { space: self.space.clone(), matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.check_same_space(rhs);
        Operator { space: self.space.clone(), matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.check_same_space(rhs);
        Operator { space: self.space.clone(), matrix: &self.matrix * &rhs.matrix }
    }
}

/// Kronecker product in the order given; the first factor varies slowest.
pub fn tensor_product(factors: &[Operator]) -> Result<Operator> {
    let (first, rest) = factors.split_first().ok_or(Error::EmptyFactorList)?;
    let mut space = first.space.clone();
    let mut matrix = first.matrix.clone();
    for f in rest {
        space = space.tensor(&f.space);
        matrix = matrix.kronecker(&f.matrix);
    }
    Ok(Operator { space, matrix })
}

/// Standard single-subsystem operators.
///
/// Two-level systems use index 0 for the upper (excited, spin-up) state, so
/// `σ_z = diag(1, -1)` and `σ_+ = |0⟩⟨1|`. Oscillators use the Fock index.
pub mod ops {
    use super::*;

    fn two_level(entries: [[Complex64; 2]; 2]) -> Operator {
        let m = CMatrix::from_fn(2, 2, |i, j| entries[i][j]);
        Operator::local(m).expect("2x2 operator")
    }

    pub fn identity(n: usize) -> Operator {
        Operator::local(CMatrix::identity(n, n)).expect("positive dimension")
    }

    pub fn sigma_z() -> Operator {
        two_level([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn sigma_x() -> Operator {
        two_level([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> Operator {
        two_level([[ZERO, -I], [I, ZERO]])
    }

    /// Raising operator `|0⟩⟨1|` (ground index 1 to excited index 0).
    pub fn sigma_plus() -> Operator {
        two_level([[ZERO, ONE], [ZERO, ZERO]])
    }

    /// Lowering operator `|1⟩⟨0|`.
    pub fn sigma_minus() -> Operator {
        two_level([[ZERO, ZERO], [ONE, ZERO]])
    }

    /// Bosonic annihilation operator truncated to `n` Fock levels.
    pub fn destroy(n: usize) -> Operator {
        let m = CMatrix::from_fn(n, n, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { ZERO });
        Operator::local(m).expect("positive dimension")
    }

    pub fn number(n: usize) -> Operator {
        let m = CMatrix::from_fn(n, n, |i, j| if i == j { c(i as f64) } else { ZERO });
        Operator::local(m).expect("positive dimension")
    }

    /// `|k⟩⟨k|` on an `n`-level subsystem.
    pub fn projector(n: usize, k: usize) -> Operator {
        let m = CMatrix::from_fn(n, n, |i, j| if i == k && j == k { ONE } else { ZERO });
        Operator::local(m).expect("positive dimension")
    }
}
