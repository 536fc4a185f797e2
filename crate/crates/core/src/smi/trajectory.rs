use rand::Rng;
use rand_distr::StandardNormal;

use super::ensemble::{EnsembleKind, EnsembleSpec};
use super::grid::TimeGrid;
use super::rng::slice_rng;
use crate::error::{Error, Result};
use crate::linalg::random::gue;
use crate::linalg::HermitianOperator;

/// One sampled realization of the piecewise-constant system Hamiltonian.
#[derive(Clone, Debug)]
pub struct HamiltonianTrajectory {
    grid: TimeGrid,
    slices: Vec<HermitianOperator>,
    index: u64,
    master_seed: u64,
}

impl HamiltonianTrajectory {
    /// Builds a trajectory from explicit slices (fixtures, complements).
    pub fn from_slices(grid: TimeGrid, slices: Vec<HermitianOperator>, master_seed: u64, index: u64) -> Result<Self> {
        if slices.len() != grid.slices() {
            return Err(Error::dim(format!(
                "trajectory has {} slices but the grid has {}",
                slices.len(),
                grid.slices()
            )));
        }
        let dim = slices[0].dim();
        if slices.iter().any(|s| s.dim() != dim) {
            return Err(Error::dim("trajectory slices differ in dimension"));
        }
        Ok(Self { grid, slices, index, master_seed })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn slices(&self) -> &[HermitianOperator] {
        &self.slices
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// `(master_seed, trajectory index)` that produced this trajectory.
    pub fn provenance(&self) -> (u64, u64) {
        (self.master_seed, self.index)
    }

    pub fn dim(&self) -> usize {
        self.slices[0].dim()
    }

    /// Largest pairwise commutator norm between slices.
    pub fn max_slice_commutator(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, s) in self.slices.iter().enumerate() {
            for t in &self.slices[a + 1..] {
                worst = worst.max(s.commutator_norm(t));
            }
        }
        worst
    }
}

/// Draws trajectory `index` of the ensemble; a pure function of its inputs.
///
/// * zero-noise: every slice is the base Hamiltonian.
/// * dephasing: slice `m` is `H_0 + Σ_i ξ_{m,i} P_i` with `ξ ~ N(0, λ²/dt)`.
/// * gue-perturbed: slice `m` is `H_0 + λ V_m`, `V_m` GUE with `E‖V‖_F² = dim`.
pub fn sample_trajectory(spec: &EnsembleSpec, grid: &TimeGrid, master_seed: u64, index: u64) -> HamiltonianTrajectory {
    let base = spec.base();
    let lambda = spec.lambda();
    let slices = (0..grid.slices())
        .map(|m| {
            if lambda == 0.0 || spec.kind() == EnsembleKind::ZeroNoise {
                return base.clone();
            }
            let mut rng = slice_rng(master_seed, index, m as u64);
            match spec.kind() {
                EnsembleKind::ZeroNoise => unreachable!(),
                EnsembleKind::Dephasing => {
                    let sigma = lambda / grid.dt().sqrt();
                    let basis = spec.measurement().expect("validated at construction");
                    let mut h = base.matrix().clone();
                    for p in basis.projectors() {
                        let xi: f64 = rng.sample(StandardNormal);
                        h.axpy(sigma * xi, p.matrix());
                    }
                    HermitianOperator::from_trusted(h)
                }
                EnsembleKind::GuePerturbed => {
                    let v = gue(base.dim(), &mut rng);
                    let mut h = base.matrix().clone();
                    h.axpy(lambda, v.matrix());
                    HermitianOperator::from_trusted(h)
                }
            }
        })
        .collect();
    HamiltonianTrajectory { grid: *grid, slices, index, master_seed }
}

/// Observer-side trajectory `H_o(t_m) = H − H_s(t_m)`.
pub fn complement_trajectory(traj: &HamiltonianTrajectory, total: &HermitianOperator) -> Result<HamiltonianTrajectory> {
    if total.dim() != traj.dim() {
        return Err(Error::dim(format!(
            "total Hamiltonian has dimension {}, trajectory {}",
            total.dim(),
            traj.dim()
        )));
    }
    let slices = traj.slices.iter().map(|s| total.sub(s)).collect::<Result<Vec<_>>>()?;
    Ok(HamiltonianTrajectory { grid: traj.grid, slices, index: traj.index, master_seed: traj.master_seed })
}
