//! Hermitian eigendecomposition, spectral projectors and the unitary
//! exponential `e^{i·s·H}`.
//!
//! The eigensolver is nalgebra's Householder tridiagonalization followed by
//! implicit QR. The exponential uses the spectral route, which is exact up to
//! eigensolver error for Hermitian inputs; diagonal inputs bypass the solver
//! entirely.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use super::operators::{HermitianOperator, UnitaryOperator};
use crate::error::{Error, Result};

/// Default degeneracy tolerance, relative to the spectral scale.
pub const DEFAULT_RELATIVE_DEGENERACY_TOL: f64 = 1e-9;

const MAX_QR_SWEEPS: usize = 10_000;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// as columns.
pub fn eigh(h: &HermitianOperator) -> Result<(Vec<f64>, ComplexMatrix)> {
    let m = h.matrix();
    let n = m.rows();
    if m.is_diagonal() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| m[(a, a)].re.total_cmp(&m[(b, b)].re));
        let values = order.iter().map(|&i| m[(i, i)].re).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |i, j| {
            if order[j] == i {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        });
        return Ok((values, vectors));
    }

    let dm = DMatrix::<Complex64>::from_fn(n, n, |i, j| m[(i, j)]);
    let eig = SymmetricEigen::try_new(dm, f64::EPSILON, MAX_QR_SWEEPS)
        .ok_or_else(|| Error::Numerical(format!("Hermitian eigensolver did not converge (dim {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// `e^{i·scale·H}`.
pub fn matrix_exponential(h: &HermitianOperator, scale: f64) -> Result<UnitaryOperator> {
    if !scale.is_finite() {
        return Err(Error::pre(format!("exponential scale {scale} is not finite")));
    }
    let m = h.matrix();
    let n = m.rows();
    if m.is_diagonal() {
        let diag: Vec<Complex64> =
            (0..n).map(|i| Complex64::from_polar(1.0, scale * m[(i, i)].re)).collect();
        return Ok(UnitaryOperator::from_trusted(ComplexMatrix::from_diagonal(&diag)));
    }
    let (values, v) = eigh(h)?;
    let phases: Vec<Complex64> = values.iter().map(|&l| Complex64::from_polar(1.0, scale * l)).collect();
    // V diag(phases) V†
    let out = ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj()).sum()
    });
    Ok(UnitaryOperator::from_trusted(out))
}

/// `A = Σ_i a_i P_i` with distinct eigenvalues `a_i` in ascending order.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    projectors: Vec<HermitianOperator>,
    multiplicities: Vec<usize>,
    /// Eigenvectors as columns, grouped by eigenvalue in ascending order.
    basis: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[HermitianOperator] {
        &self.projectors
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Orthonormal eigenbasis, columns ordered by eigenvalue.
    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenspace label of each basis column.
    pub fn block_labels(&self) -> Vec<usize> {
        self.multiplicities
            .iter()
            .enumerate()
            .flat_map(|(k, &m)| std::iter::repeat_n(k, m))
            .collect()
    }

    /// Σ a_i P_i.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (a, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out.axpy(*a, p.matrix());
        }
        out
    }

    /// `V† M V`: coordinates of `M` in the eigenbasis.
    pub fn to_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        &(&self.basis.adjoint() * m) * &self.basis
    }
}

/// Spectral decomposition merging eigenvalues whose consecutive gaps are
/// below `degeneracy_tol` (absolute).
pub fn spectral_decompose(a: &HermitianOperator, degeneracy_tol: f64) -> Result<SpectralDecomposition> {
    if degeneracy_tol.is_nan() || degeneracy_tol < 0.0 {
        return Err(Error::pre("degeneracy tolerance must be non-negative"));
    }
    let (values, vectors) = eigh(a)?;
    let n = values.len();

    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..n {
        if values[k] - values[k - 1] < degeneracy_tol {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
    }

    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    let mut multiplicities = Vec::with_capacity(groups.len());
    for g in &groups {
        eigenvalues.push(g.iter().map(|&k| values[k]).sum::<f64>() / g.len() as f64);
        multiplicities.push(g.len());
        let p = ComplexMatrix::from_fn(n, n, |i, j| g.iter().map(|&k| vectors[(i, k)] * vectors[(j, k)].conj()).sum());
        projectors.push(HermitianOperator::from_trusted(p));
    }
    Ok(SpectralDecomposition { eigenvalues, projectors, multiplicities, basis: vectors })
}

/// Spectral decomposition with the default tolerance
/// `1e-9 · max(spectral range, max |a_i|)`.
pub fn spectral_decompose_default(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    let values = a.eigenvalues()?;
    let range = values[values.len() - 1] - values[0];
    let largest = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut scale = range.max(largest);
    if scale == 0.0 {
        scale = 1.0;
    }
    spectral_decompose(a, DEFAULT_RELATIVE_DEGENERACY_TOL * scale)
}
