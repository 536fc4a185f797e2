use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::operators::check_same_dim;
use crate::linalg::{ComplexMatrix, DensityMatrix};
use crate::smi::{ensemble_average_state_in_basis, EnsembleKind, EnsembleSpec, TimeGrid};

/// Coherence magnitude as a function of the dressing time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCurve {
    pub taus: Vec<f64>,
    pub measured_offdiagonals: Vec<f64>,
    /// `|ρ0_ij|·e^{−λ²τ}`; dephasing ensembles only.
    pub analytic_offdiagonals: Option<Vec<f64>>,
    pub monte_carlo_errors: Vec<f64>,
    pub slices: Vec<usize>,
    /// Eigenbasis entry `(i, j)` tracked along the curve.
    pub entry: (usize, usize),
}

/// Gaussian characteristic function of the accumulated relative phase:
/// `E[e^{iΔθ}] = e^{−Var(Δθ)/2}` with `Var(Δθ) = 2λ²τ`.
pub fn dephasing_factor(lambda: f64, tau: f64) -> f64 {
    (-lambda * lambda * tau).exp()
}

pub fn decay_curve(
    rho0: &DensityMatrix,
    spec: &EnsembleSpec,
    taus: &[f64],
    slices_per_unit_time: usize,
    n: usize,
    master_seed: u64,
) -> Result<DecayCurve> {
    if spec.kind() == EnsembleKind::ZeroNoise {
        return Err(Error::config("decay_curve needs a dephasing or gue-perturbed ensemble, got zero-noise"));
    }
    if spec.lambda() == 0.0 {
        return Err(Error::config("decay_curve needs lambda > 0 (no decay to measure at lambda = 0)"));
    }
    if taus.is_empty() {
        return Err(Error::config("decay_curve needs at least one tau"));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("decay_curve taus must be strictly increasing"));
    }
    check_same_dim(rho0.dim(), spec.dim(), "decay_curve")?;
    if rho0.dim() < 2 {
        return Err(Error::dim("decay_curve needs dimension >= 2"));
    }

    let (basis, labels) = match spec.measurement() {
        Some(d) => (d.basis().clone(), d.block_labels()),
        None => (ComplexMatrix::identity(rho0.dim()), (0..rho0.dim()).collect()),
    };
    let r0 = &(&basis.adjoint() * rho0.matrix()) * &basis;
    let mut entry = (0, 1);
    let mut best = -1.0;
    for i in 0..rho0.dim() {
        for j in (i + 1)..rho0.dim() {
            if labels[i] != labels[j] && r0[(i, j)].norm() > best {
                best = r0[(i, j)].norm();
                entry = (i, j);
            }
        }
    }
    let c0 = r0[entry].norm();

    let mut measured = Vec::with_capacity(taus.len());
    let mut errors = Vec::with_capacity(taus.len());
    let mut slices = Vec::with_capacity(taus.len());
    for &tau in taus {
        let grid = TimeGrid::with_density(tau, slices_per_unit_time)?;
        let s = ensemble_average_state_in_basis(rho0, spec, &grid, n, master_seed, Some(&basis))?;
        measured.push(s.mean()[entry].norm());
        errors.push(s.magnitude_standard_error(entry.0, entry.1));
        slices.push(grid.slices());
    }
    let analytic = (spec.kind() == EnsembleKind::Dephasing)
        .then(|| taus.iter().map(|&t| c0 * dephasing_factor(spec.lambda(), t)).collect());
    Ok(DecayCurve {
        taus: taus.to_vec(),
        measured_offdiagonals: measured,
        analytic_offdiagonals: analytic,
        monte_carlo_errors: errors,
        slices,
        entry,
    })
}
