//! Seeded random matrices and states for fixtures and ensembles.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::ComplexMatrix;
use super::operators::{DensityMatrix, HermitianOperator, StateVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// GUE sample normalized so that `E‖V‖_F² = dim`: diagonal entries are
/// `N(0, 1/dim)`, off-diagonal real and imaginary parts `N(0, 1/(2·dim))`.
pub fn gue<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let sd_diag = (1.0 / dim as f64).sqrt();
    let sd_off = (0.5 / dim as f64).sqrt();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(sd_diag * gaussian(rng), 0.0);
        for j in (i + 1)..dim {
            let z = Complex64::new(sd_off * gaussian(rng), sd_off * gaussian(rng));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianOperator::from_trusted(m)
}

/// Haar-like random pure state (normalized complex Gaussian vector).
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let v = (0..dim).map(|_| Complex64::new(gaussian(rng), gaussian(rng))).collect();
    StateVector::normalized(v).expect("Gaussian vector is nonzero")
}

/// Full-rank random density matrix `G G† / tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::from_trusted(w.scale_real(1.0 / tr))
}
