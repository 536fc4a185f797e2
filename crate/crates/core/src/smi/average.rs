//! Ensemble averages over trajectories with a reproducible reduction.
//!
//! Trajectories are evaluated in parallel in fixed-size batches; each batch
//! is collected in index order and folded sequentially, so the floating-point
//! result is identical for any number of workers.

use num_complex::Complex64;
use rayon::prelude::*;

use super::channel::{channel_from_trajectory, dress_operator, dress_state, ChannelOperator, Direction, Ordering};
use super::ensemble::EnsembleSpec;
use super::grid::TimeGrid;
use super::trajectory::sample_trajectory;
use crate::error::{Error, Result};
use crate::linalg::operators::check_same_dim;
use crate::linalg::{ComplexMatrix, DensityMatrix, HermitianOperator};

const BATCH: usize = 256;

/// Runs `map` on the channel of every trajectory `0..n` (in parallel) and
/// feeds the results to `sink` in ascending trajectory order.
pub fn fold_channels<T, F, S>(
    spec: &EnsembleSpec,
    grid: &TimeGrid,
    n: usize,
    master_seed: u64,
    ordering: Ordering,
    map: F,
    mut sink: S,
) -> Result<()>
where
    T: Send,
    F: Fn(&ChannelOperator) -> Result<T> + Sync,
    S: FnMut(u64, T) -> Result<()>,
{
    let mut start = 0usize;
    while start < n {
        let end = (start + BATCH).min(n);
        let batch: Vec<T> = (start..end)
            .into_par_iter()
            .map(|l| {
                let traj = sample_trajectory(spec, grid, master_seed, l as u64);
                let k = channel_from_trajectory(&traj, ordering)?;
                map(&k)
            })
            .collect::<Result<Vec<T>>>()?;
        for (offset, item) in batch.into_iter().enumerate() {
            sink((start + offset) as u64, item)?;
        }
        start = end;
    }
    Ok(())
}

/// Trajectory-averaged matrix with per-entry dispersion.
#[derive(Clone, Debug)]
pub struct EnsembleSummary {
    n: usize,
    mean: ComplexMatrix,
    var_re: Vec<f64>,
    var_im: Vec<f64>,
    cov_re_im: Vec<f64>,
    monte_carlo_error: f64,
    per_trajectory: Option<Vec<Complex64>>,
}

impl EnsembleSummary {
    pub fn n_trajectories(&self) -> usize {
        self.n
    }

    /// `(1/N) Σ_l X_l`, summed in ascending `l`.
    pub fn mean(&self) -> &ComplexMatrix {
        &self.mean
    }

    pub fn mean_operator(&self) -> HermitianOperator {
        HermitianOperator::from_trusted(self.mean.clone())
    }

    /// The mean as a validated density matrix (for state ensembles).
    pub fn mean_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.mean.hermitian_part())
    }

    /// Sample variance `E|X_ij − mean_ij|²` of entry `(i, j)`.
    pub fn variance(&self, i: usize, j: usize) -> f64 {
        let k = i * self.mean.cols() + j;
        self.var_re[k] + self.var_im[k]
    }

    pub fn max_variance(&self) -> f64 {
        (0..self.var_re.len()).map(|k| self.var_re[k] + self.var_im[k]).fold(0.0, f64::max)
    }

    /// Standard error of the mean of entry `(i, j)`.
    pub fn standard_error(&self, i: usize, j: usize) -> f64 {
        (self.variance(i, j) / self.n as f64).sqrt()
    }

    /// Standard error of `|mean_ij|`: the dispersion projected on the
    /// direction of the mean (delta method). Falls back to
    /// [`standard_error`](Self::standard_error) when the mean vanishes.
    pub fn magnitude_standard_error(&self, i: usize, j: usize) -> f64 {
        let k = i * self.mean.cols() + j;
        let m = self.mean[(i, j)];
        let r = m.norm();
        if r == 0.0 {
            return self.standard_error(i, j);
        }
        let (c, s) = (m.re / r, m.im / r);
        let var = c * c * self.var_re[k] + s * s * self.var_im[k] + 2.0 * c * s * self.cov_re_im[k];
        (var.max(0.0) / self.n as f64).sqrt()
    }

    /// Max over entries of the standard error of the mean.
    pub fn monte_carlo_error(&self) -> f64 {
        self.monte_carlo_error
    }

    pub fn per_trajectory(&self) -> Option<&[Complex64]> {
        self.per_trajectory.as_deref()
    }
}

/// Sequential accumulator: plain sum for the mean, Welford for dispersion.
pub(crate) struct Accumulator {
    n: usize,
    rows: usize,
    cols: usize,
    sum: ComplexMatrix,
    w_mean: Vec<Complex64>,
    m2_re: Vec<f64>,
    m2_im: Vec<f64>,
    c_ri: Vec<f64>,
    scalars: Option<Vec<Complex64>>,
}

impl Accumulator {
    pub(crate) fn new(rows: usize, cols: usize, keep_scalars: bool) -> Self {
        let len = rows * cols;
        Self {
            n: 0,
            rows,
            cols,
            sum: ComplexMatrix::zeros(rows, cols),
            w_mean: vec![Complex64::new(0.0, 0.0); len],
            m2_re: vec![0.0; len],
            m2_im: vec![0.0; len],
            c_ri: vec![0.0; len],
            scalars: keep_scalars.then(Vec::new),
        }
    }

    pub(crate) fn push(&mut self, x: &ComplexMatrix, scalar: Option<Complex64>) {
        debug_assert_eq!((x.rows(), x.cols()), (self.rows, self.cols));
        self.n += 1;
        let nf = self.n as f64;
        self.sum.axpy(1.0, x);
        for (k, z) in x.as_slice().iter().enumerate() {
            let dx = z.re - self.w_mean[k].re;
            let dy = z.im - self.w_mean[k].im;
            self.w_mean[k].re += dx / nf;
            self.w_mean[k].im += dy / nf;
            self.m2_re[k] += dx * (z.re - self.w_mean[k].re);
            self.m2_im[k] += dy * (z.im - self.w_mean[k].im);
            self.c_ri[k] += dx * (z.im - self.w_mean[k].im);
        }
        if let (Some(v), Some(s)) = (self.scalars.as_mut(), scalar) {
            v.push(s);
        }
    }

    pub(crate) fn finish(self) -> Result<EnsembleSummary> {
        if self.n < 2 {
            return Err(Error::config(format!("ensemble needs at least 2 trajectories, got {}", self.n)));
        }
        let nf = self.n as f64;
        let denom = nf - 1.0;
        let var_re: Vec<f64> = self.m2_re.iter().map(|v| v / denom).collect();
        let var_im: Vec<f64> = self.m2_im.iter().map(|v| v / denom).collect();
        let cov_re_im: Vec<f64> = self.c_ri.iter().map(|v| v / denom).collect();
        let monte_carlo_error = var_re
            .iter()
            .zip(&var_im)
            .map(|(a, b)| ((a + b) / nf).sqrt())
            .fold(0.0, f64::max);
        Ok(EnsembleSummary {
            n: self.n,
            mean: self.sum.scale_real(1.0 / nf),
            var_re,
            var_im,
            cov_re_im,
            monte_carlo_error,
            per_trajectory: self.scalars,
        })
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::config(format!("n_trajectories must be >= 2, got {n}")));
    }
    Ok(())
}

/// `(1/N) Σ_l K_l A K_l†` over time-ordered channels.
pub fn ensemble_average_operator(
    a: &HermitianOperator,
    spec: &EnsembleSpec,
    grid: &TimeGrid,
    n: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    check_n(n)?;
    check_same_dim(a.dim(), spec.dim(), "ensemble_average_operator")?;
    let mut acc = Accumulator::new(a.dim(), a.dim(), false);
    fold_channels(
        spec,
        grid,
        n,
        master_seed,
        Ordering::TimeOrdered,
        |k| dress_operator(a, k),
        |_, d| {
            acc.push(d.matrix(), None);
            Ok(())
        },
    )?;
    acc.finish()
}

/// `(1/N) Σ_l K_l† ρ_0 K_l` over time-ordered channels.
pub fn ensemble_average_state(
    rho0: &DensityMatrix,
    spec: &EnsembleSpec,
    grid: &TimeGrid,
    n: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    ensemble_average_state_in_basis(rho0, spec, grid, n, master_seed, None)
}

/// As [`ensemble_average_state`], with every dressed state expressed as
/// `V† ρ_l V` before averaging when a basis `V` is given.
pub fn ensemble_average_state_in_basis(
    rho0: &DensityMatrix,
    spec: &EnsembleSpec,
    grid: &TimeGrid,
    n: usize,
    master_seed: u64,
    basis: Option<&ComplexMatrix>,
) -> Result<EnsembleSummary> {
    check_n(n)?;
    check_same_dim(rho0.dim(), spec.dim(), "ensemble_average_state")?;
    if let Some(v) = basis {
        check_same_dim(v.rows(), rho0.dim(), "ensemble basis")?;
    }
    let vh = basis.map(|v| v.adjoint());
    let mut acc = Accumulator::new(rho0.dim(), rho0.dim(), false);
    fold_channels(
        spec,
        grid,
        n,
        master_seed,
        Ordering::TimeOrdered,
        |k| {
            let r = dress_state(rho0, k, Direction::Forward)?;
            Ok(match (&vh, basis) {
                (Some(vh), Some(v)) => &(vh * r.matrix()) * v,
                _ => r.matrix().clone(),
            })
        },
        |_, m| {
            acc.push(&m, None);
            Ok(())
        },
    )?;
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spectral_decompose_default, StateVector};

    fn sz_dephasing(lambda: f64) -> EnsembleSpec {
        let basis = spectral_decompose_default(&HermitianOperator::sigma_z()).unwrap();
        EnsembleSpec::dephasing(lambda, HermitianOperator::zeros(2), basis).unwrap()
    }

    #[test]
    fn rejects_small_ensembles() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let a = HermitianOperator::sigma_z();
        assert!(matches!(
            ensemble_average_operator(&a, &sz_dephasing(1.0), &grid, 1, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_noise_mean_is_single_dressing_with_no_variance() {
        let grid = TimeGrid::new(0.8, 16).unwrap();
        let spec = EnsembleSpec::zero_noise(HermitianOperator::sigma_x());
        let a = HermitianOperator::sigma_z();
        let s = ensemble_average_operator(&a, &spec, &grid, 8, 1).unwrap();
        let traj = sample_trajectory(&spec, &grid, 1, 0);
        let single = dress_operator(&a, &channel_from_trajectory(&traj, Ordering::TimeOrdered).unwrap()).unwrap();
        assert!(s.mean().max_abs_diff(single.matrix()) < 1e-15);
        assert!(s.max_variance() < 1e-30);
    }

    #[test]
    fn dephasing_fixes_observable_and_diagonal() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let a = HermitianOperator::sigma_z();
        let s = ensemble_average_operator(&a, &sz_dephasing(1.0), &grid, 200, 3).unwrap();
        assert!(s.mean().max_abs_diff(a.matrix()) < 1e-12);

        let rho0 = DensityMatrix::from_pure(&StateVector::plus());
        let st = ensemble_average_state(&rho0, &sz_dephasing(1.0), &grid, 200, 3).unwrap();
        let m = st.mean_state().unwrap();
        for i in 0..2 {
            assert!((m.matrix()[(i, i)] - rho0.matrix()[(i, i)]).norm() < 1e-12);
        }
        assert!(m.matrix()[(0, 1)].norm() < 0.5);
    }

    #[test]
    fn eigenstate_is_stationary_under_dephasing() {
        let grid = TimeGrid::new(2.0, 40).unwrap();
        let rho0 = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap());
        let s = ensemble_average_state(&rho0, &sz_dephasing(1.5), &grid, 50, 8).unwrap();
        assert!(s.mean().max_abs_diff(rho0.matrix()) < 1e-12);
    }

    #[test]
    fn welford_matches_two_pass() {
        let mut acc = Accumulator::new(1, 1, true);
        let xs = [1.0, 2.5, -0.5, 4.0, 3.25];
        for &x in &xs {
            let m = ComplexMatrix::from_diagonal(&[Complex64::new(x, 2.0 * x)]);
            acc.push(&m, Some(Complex64::new(x, 0.0)));
        }
        let s = acc.finish().unwrap();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.variance(0, 0) - 5.0 * var).abs() < 1e-12);
        assert_eq!(s.per_trajectory().unwrap().len(), 5);
        let direction_var = var * 5.0; // |(1, 2)|² · var along the mean direction
        assert!((s.magnitude_standard_error(0, 0) - (direction_var / 5.0).sqrt()).abs() < 1e-12);
    }
}
