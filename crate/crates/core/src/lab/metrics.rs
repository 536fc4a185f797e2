use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::operators::check_same_dim;
use crate::linalg::{ComplexMatrix, DensityMatrix, SpectralDecomposition};
use crate::smi::EnsembleSummary;

/// Outcome probabilities `p_i = tr(P_i ρ)` in ascending eigenvalue order.
pub fn born_distribution(rho: &DensityMatrix, decomp: &SpectralDecomposition) -> Result<Vec<f64>> {
    check_same_dim(rho.dim(), decomp.dim(), "born_distribution")?;
    Ok(decomp
        .projectors()
        .iter()
        .map(|p| (p.matrix() * rho.matrix()).trace().re)
        .collect())
}

/// Coherence and population diagnostics, all taken in the eigenbasis of the
/// measured observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecoherenceMetrics {
    /// Largest `|ρ_ij|` between basis vectors of different eigenspaces.
    pub offdiagonal_norm: f64,
    pub purity: f64,
    /// `max_i |tr(P_i ρ) − tr(P_i ρ_0)|`.
    pub born_deviation: f64,
    /// Largest change of a diagonal entry relative to `ρ_0`.
    pub diagonal_drift: f64,
}

pub fn decoherence_metrics(
    rho: &DensityMatrix,
    rho0: &DensityMatrix,
    decomp: &SpectralDecomposition,
) -> Result<DecoherenceMetrics> {
    check_same_dim(rho.dim(), rho0.dim(), "decoherence_metrics")?;
    check_same_dim(rho.dim(), decomp.dim(), "decoherence_metrics")?;
    let r = decomp.to_eigenbasis(rho.matrix());
    let r0 = decomp.to_eigenbasis(rho0.matrix());
    let labels = decomp.block_labels();
    let n = rho.dim();

    let mut offdiag = 0.0f64;
    let mut drift = 0.0f64;
    for i in 0..n {
        drift = drift.max((r[(i, i)].re - r0[(i, i)].re).abs());
        for j in 0..n {
            if labels[i] != labels[j] {
                offdiag = offdiag.max(r[(i, j)].norm());
            }
        }
    }
    let p = born_distribution(rho, decomp)?;
    let p0 = born_distribution(rho0, decomp)?;
    let born = p.iter().zip(&p0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(DecoherenceMetrics { offdiagonal_norm: offdiag, purity: rho.purity(), born_deviation: born, diagonal_drift: drift })
}

/// Block structure of an averaged operator `B` relative to `A = Σ a_i P_i`:
/// the largest Frobenius norm of an off-diagonal block `P_i B P_j` and the
/// largest `‖P_i B P_i − a_i P_i‖_F`.
pub fn reduced_operator_check(summary: &EnsembleSummary, decomp: &SpectralDecomposition) -> Result<(f64, f64)> {
    block_norms(summary.mean(), decomp)
}

/// [`reduced_operator_check`] on a plain matrix.
pub fn block_norms(b: &ComplexMatrix, decomp: &SpectralDecomposition) -> Result<(f64, f64)> {
    if !b.is_square() || b.rows() != decomp.dim() {
        return Err(Error::dim("mean operator and decomposition differ in dimension"));
    }
    let mut offdiag = 0.0f64;
    let mut drift = 0.0f64;
    for (i, pi) in decomp.projectors().iter().enumerate() {
        let left = pi.matrix() * b;
        for (j, pj) in decomp.projectors().iter().enumerate() {
            let block = &left * pj.matrix();
            if i == j {
                let target = pi.matrix().scale_real(decomp.eigenvalues()[i]);
                drift = drift.max((&block - &target).frobenius_norm());
            } else {
                offdiag = offdiag.max(block.frobenius_norm());
            }
        }
    }
    Ok((offdiag, drift))
}

/// Uniformity of the averaged operator across eigenprojectors.
#[derive(Clone, Debug, Serialize)]
pub struct UniformityCheck {
    /// `(tr(P_i B)/m_i − ā) / (a_i − ā)` with `ā = tr(A)/dim`; `None` where
    /// `a_i = ā`.
    pub contraction_factors: Vec<Option<f64>>,
    /// Max deviation of a factor from their mean.
    pub spread: f64,
    /// Bound on the standard error of a single factor.
    pub standard_error: f64,
}

/// Checks that averaging contracts every eigenvalue toward the spectral mean
/// by the same factor, i.e. no eigenprojector is preferred.
pub fn superselection_uniformity(summary: &EnsembleSummary, decomp: &SpectralDecomposition) -> Result<UniformityCheck> {
    let b = summary.mean();
    if b.rows() != decomp.dim() {
        return Err(Error::dim("mean operator and decomposition differ in dimension"));
    }
    let dim = decomp.dim() as f64;
    let abar = decomp
        .eigenvalues()
        .iter()
        .zip(decomp.multiplicities())
        .map(|(a, &m)| a * m as f64)
        .sum::<f64>()
        / dim;
    let scale = decomp.eigenvalues().iter().map(|a| (a - abar).abs()).fold(0.0, f64::max);
    let mut factors = Vec::new();
    let mut min_gap = f64::INFINITY;
    for ((a, p), &m) in decomp.eigenvalues().iter().zip(decomp.projectors()).zip(decomp.multiplicities()) {
        let gap = a - abar;
        if gap.abs() <= 1e-12 * scale.max(1.0) {
            factors.push(None);
            continue;
        }
        min_gap = min_gap.min(gap.abs());
        let weight = (p.matrix() * b).trace().re / m as f64;
        factors.push(Some((weight - abar) / gap));
    }
    let present: Vec<f64> = factors.iter().flatten().copied().collect();
    let mean = present.iter().sum::<f64>() / present.len().max(1) as f64;
    let spread = present.iter().map(|f| (f - mean).abs()).fold(0.0, f64::max);
    let se_diag = (0..b.rows()).map(|k| summary.standard_error(k, k)).fold(0.0, f64::max);
    Ok(UniformityCheck { contraction_factors: factors, spread, standard_error: se_diag / min_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spectral_decompose_default, HermitianOperator, StateVector};

    fn sz() -> SpectralDecomposition {
        spectral_decompose_default(&HermitianOperator::sigma_z()).unwrap()
    }

    #[test]
    fn born_examples() {
        let p = born_distribution(&DensityMatrix::from_pure(&StateVector::plus()), &sz()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let p = born_distribution(&DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap()), &sz()).unwrap();
        assert_eq!(p, vec![0.0, 1.0]);
        // eigenvalue −1 ↔ |1⟩ carries weight 0.75
        let p = born_distribution(&DensityMatrix::from_probabilities(&[0.25, 0.75]).unwrap(), &sz()).unwrap();
        assert_eq!(p, vec![0.75, 0.25]);
        assert!(born_distribution(&DensityMatrix::maximally_mixed(3), &sz()).is_err());
    }

    #[test]
    fn metrics_of_identical_states() {
        let rho = DensityMatrix::from_pure(&StateVector::plus());
        let m = decoherence_metrics(&rho, &rho, &sz()).unwrap();
        assert!((m.offdiagonal_norm - 0.5).abs() < 1e-15);
        assert_eq!((m.diagonal_drift, m.born_deviation), (0.0, 0.0));
        assert!((m.purity - 1.0).abs() < 1e-15);
    }

    #[test]
    fn metrics_of_fully_dephased_state() {
        let rho0 = DensityMatrix::from_pure(&StateVector::plus());
        let dephased = DensityMatrix::from_probabilities(&[0.5, 0.5]).unwrap();
        let m = decoherence_metrics(&dephased, &rho0, &sz()).unwrap();
        assert_eq!(m.offdiagonal_norm, 0.0);
        assert!(m.born_deviation < 1e-15);
        assert!((m.purity - 0.5).abs() < 1e-15);

        let rho0 = crate::linalg::random::random_density(3, &mut crate::smi::rng::slice_rng(1, 0, 0));
        let dec = spectral_decompose_default(&HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0])).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| rho0.matrix()[(i, i)].re).collect();
        let m = decoherence_metrics(&DensityMatrix::from_probabilities(&diag).unwrap(), &rho0, &dec).unwrap();
        assert!(m.born_deviation < 1e-15);
        assert!((m.purity - diag.iter().map(|p| p * p).sum::<f64>()).abs() < 1e-15);
    }
}
