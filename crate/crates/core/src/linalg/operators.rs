use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use super::spectral::eigh;
use crate::error::{Error, Result};

/// Max-entry tolerance on `M − M†` for Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Max-entry tolerance on `U†U − I`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on the Euclidean norm of a state vector.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on the unit trace of a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density matrix.
pub const PSD_TOL: f64 = 1e-10;

/// A square matrix equal to its conjugate transpose.
///
/// Stored exactly Hermitian: inputs within [`HERMITIAN_TOL`] are replaced by
/// their Hermitian part.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, HERMITIAN_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dim(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = matrix.hermiticity_defect();
        if defect > tol {
            return Err(Error::pre(format!(
                "matrix is not Hermitian: max |M - M^dagger| = {defect:e} > {tol:e}"
            )));
        }
        Ok(Self { matrix: matrix.hermitian_part() })
    }

    /// Wraps a matrix the caller knows to be Hermitian up to rounding.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        Self { matrix: matrix.hermitian_part() }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self { matrix: ComplexMatrix::from_real_diagonal(diag) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim) }
    }

    pub fn sigma_x() -> Self {
        Self::from_trusted(ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap())
    }

    pub fn sigma_y() -> Self {
        let m = ComplexMatrix::from_row_major(
            2,
            2,
            vec![ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO],
        )
        .unwrap();
        Self::from_trusted(m)
    }

    pub fn sigma_z() -> Self {
        Self::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        check_same_dim(self.dim(), other.dim(), "Hermitian sum")?;
        Ok(Self { matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        check_same_dim(self.dim(), other.dim(), "Hermitian difference")?;
        Ok(Self { matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        Self { matrix: self.matrix.scale_real(s) }
    }

    /// Max-entry norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &HermitianOperator) -> f64 {
        self.matrix.commutator(&other.matrix).max_abs()
    }

    /// Sorted eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eigh(self)?.0)
    }

    /// tr[A ρ] for a density matrix of matching dimension.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        check_same_dim(self.dim(), rho.dim(), "expectation")?;
        Ok((&self.matrix * rho.matrix()).trace().re)
    }
}

/// A unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    matrix: ComplexMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dim("unitary operator must be square"));
        }
        let defect = unitarity_defect(&matrix);
        if defect > tol {
            return Err(Error::Numerical(format!(
                "matrix is not unitary: max |U^dagger U - I| = {defect:e} > {tol:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        Self { matrix: self.matrix.adjoint() }
    }

    /// `self · other`.
    pub fn compose(&self, other: &UnitaryOperator) -> Result<UnitaryOperator> {
        check_same_dim(self.dim(), other.dim(), "unitary product")?;
        Ok(Self { matrix: &self.matrix * &other.matrix })
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }
}

pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    (&m.adjoint() * m).max_abs_diff(&ComplexMatrix::identity(n))
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::dim("state vector is empty"));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::pre("state vector has non-finite amplitudes"));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::pre(format!("state vector norm is {norm}, expected 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm; rejects the zero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::dim("state vector is empty"));
        }
        let n = norm(&amplitudes);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::pre("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self { amplitudes: amplitudes.iter().map(|z| z / n).collect() })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 || index >= dim {
            return Err(Error::dim(format!("basis state {index} of dimension {dim}")));
        }
        let mut a = vec![ZERO; dim];
        a[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: a })
    }

    /// Uniform superposition of the computational basis; |+⟩ for a qubit.
    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::dim("state vector is empty"));
        }
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self { amplitudes: vec![a; dim] })
    }

    pub fn plus() -> Self {
        Self::uniform(2).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Multiplies by a global phase.
    pub fn with_phase(&self, theta: f64) -> StateVector {
        let p = Complex64::from_polar(1.0, theta);
        Self { amplitudes: self.amplitudes.iter().map(|z| z * p).collect() }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let h = HermitianOperator::new(matrix)?;
        let tr = h.matrix().trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::pre(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = h.eigenvalues()?[0];
        if min < -PSD_TOL {
            return Err(Error::pre(format!("density matrix has negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix: h.into_matrix() })
    }

    /// Skips the positivity eigen-check; used where positivity holds by
    /// construction (unitary conjugation, convex combination, partial trace).
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix: matrix.hermitian_part() }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self::from_trusted(ComplexMatrix::outer(psi.amplitudes(), psi.amplitudes()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    /// Diagonal density matrix from a probability vector.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(p))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// tr(ρ²).
    pub fn purity(&self) -> f64 {
        // ρ Hermitian: tr(ρ²) = Σ |ρ_ij|².
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

pub(crate) fn check_same_dim(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::dim(format!("{what}: dimension {a} does not match {b}")));
    }
    Ok(())
}
