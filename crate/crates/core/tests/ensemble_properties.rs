mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smi_core::experiment::run::with_workers;
use smi_core::lab::{dephasing_factor, stability_test};
use smi_core::linalg::{eigh, spectral_decompose_default, DensityMatrix, HermitianOperator, StateVector};
use smi_core::smi::{
    channel_from_trajectory, complement_trajectory, dress_operator, ensemble_average_operator, ensemble_average_state,
    sample_trajectory, ChannelOperator, EnsembleSpec, Ordering, TimeGrid,
};

fn herm(d: &Dense, n: usize) -> HermitianOperator {
    HermitianOperator::new(matrix(d, n)).unwrap()
}

fn spec_for(kind: u8, lambda: f64, a: &HermitianOperator, base: HermitianOperator) -> EnsembleSpec {
    match kind % 3 {
        0 => EnsembleSpec::zero_noise(base),
        // Dephasing requires a base that commutes with the measured observable.
        1 => EnsembleSpec::dephasing(lambda, a.scale(0.3), spectral_decompose_default(a).unwrap()).unwrap(),
        _ => EnsembleSpec::gue_perturbed(lambda, base).unwrap(),
    }
}

fn sorted_eigenvalues(h: &HermitianOperator) -> Vec<f64> {
    let mut v = eigh(h).unwrap().0;
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn channels_are_unitary(seed in any::<u64>(), kind in 0u8..3, n in 2usize..=5, slices in 1usize..=300, lambda in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = herm(&random_hermitian(n, &mut rng), n);
        let spec = spec_for(kind, lambda, &a, herm(&random_hermitian(n, &mut rng), n));
        let grid = TimeGrid::new(1.3, slices).unwrap();
        for idx in 0..3 {
            let k = channel_from_trajectory(&sample_trajectory(&spec, &grid, seed, idx), Ordering::TimeOrdered).unwrap();
            prop_assert!(k.unitary().defect() <= ChannelOperator::unitarity_tolerance(slices));
        }
    }

    #[test]
    fn dressing_preserves_spectrum(seed in any::<u64>(), kind in 0u8..3, n in 2usize..=5, lambda in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = herm(&random_hermitian(n, &mut rng), n);
        let spec = spec_for(kind, lambda, &a, herm(&random_hermitian(n, &mut rng), n));
        let grid = TimeGrid::new(1.0, 30).unwrap();
        let k = channel_from_trajectory(&sample_trajectory(&spec, &grid, seed, 0), Ordering::TimeOrdered).unwrap();
        let d = dress_operator(&a, &k).unwrap();
        for (x, y) in sorted_eigenvalues(&a).iter().zip(sorted_eigenvalues(&d)) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn zero_noise_dressing_is_heisenberg(seed in any::<u64>(), n in 1usize..=6, tau in 0.1f64..3.0, slices in 1usize..=64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hd = random_hermitian(n, &mut rng);
        let ad = random_hermitian(n, &mut rng);
        let grid = TimeGrid::new(tau, slices).unwrap();
        let traj = sample_trajectory(&EnsembleSpec::zero_noise(herm(&hd, n)), &grid, seed, 0);
        let d = dress_operator(&herm(&ad, n), &channel_from_trajectory(&traj, Ordering::TimeOrdered).unwrap()).unwrap();
        let k = expm_i(&hd, tau, n);
        let reference = mul(&mul(&k, &ad, n), &adjoint(&k, n), n);
        prop_assert!(max_abs_diff(d.matrix().as_slice(), &reference) <= 1e-10);
    }

    #[test]
    fn mean_state_is_a_density_matrix(seed in any::<u64>(), kind in 0u8..3, n in 2usize..=4, lambda in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = herm(&random_hermitian(n, &mut rng), n);
        let spec = spec_for(kind, lambda, &a, herm(&random_hermitian(n, &mut rng), n));
        let rho0 = DensityMatrix::new(matrix(&random_density(n, &mut rng), n)).unwrap();
        let s = ensemble_average_state(&rho0, &spec, &TimeGrid::new(1.0, 20).unwrap(), 40, seed).unwrap();
        let m = s.mean();
        prop_assert!((m.trace().re - 1.0).abs() <= 1e-12);
        let h = HermitianOperator::new(m.hermitian_part()).unwrap();
        prop_assert!(eigh(&h).unwrap().0.iter().all(|&x| x >= -1e-10));
        let purity = s.mean_state().unwrap().purity();
        prop_assert!(purity <= rho0.purity() + 1e-12);
        prop_assert!(purity <= 1.0 + 1e-12);
    }

    #[test]
    fn commuting_slices_make_orderings_agree(seed in any::<u64>(), spectrum in prop::collection::vec(-2i32..=2, 2..=5), lambda in 0.0f64..3.0) {
        let n = spectrum.len();
        let a = HermitianOperator::from_real_diagonal(&spectrum.iter().map(|&x| x as f64).collect::<Vec<_>>());
        // Dephasing slices are diagonal here, so they commute exactly.
        let spec = EnsembleSpec::dephasing(lambda, HermitianOperator::zeros(n), spectral_decompose_default(&a).unwrap()).unwrap();
        let traj = sample_trajectory(&spec, &TimeGrid::new(1.0, 50).unwrap(), seed, 0);
        prop_assert!(traj.max_slice_commutator() <= 1e-12);
        let t = channel_from_trajectory(&traj, Ordering::TimeOrdered).unwrap();
        let s = channel_from_trajectory(&traj, Ordering::NaiveSum).unwrap();
        prop_assert!(t.unitary().matrix().max_abs_diff(s.unitary().matrix()) <= 1e-12);
    }

    #[test]
    fn complement_restores_total(seed in any::<u64>(), n in 2usize..=4, lambda in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = herm(&random_hermitian(n, &mut rng), n);
        let spec = EnsembleSpec::gue_perturbed(lambda, HermitianOperator::zeros(n)).unwrap();
        let traj = sample_trajectory(&spec, &TimeGrid::new(1.0, 8).unwrap(), seed, 2);
        let comp = complement_trajectory(&traj, &total).unwrap();
        for (hs, ho) in traj.slices().iter().zip(comp.slices()) {
            prop_assert!(hs.add(ho).unwrap().matrix().max_abs_diff(total.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn eigenstates_are_stable_under_commuting_ensembles(seed in any::<u64>(), lambda in 0.0f64..3.0, n in 2usize..=4) {
        let diag: Vec<f64> = (0..n).map(|i| i as f64 - 0.5).collect();
        let a = HermitianOperator::from_real_diagonal(&diag);
        let base = HermitianOperator::from_real_diagonal(&diag.iter().map(|x| x * 0.3).collect::<Vec<_>>());
        let spec = EnsembleSpec::dephasing(lambda, base, spectral_decompose_default(&a).unwrap()).unwrap();
        let grid = TimeGrid::new(1.0, 40).unwrap();
        for (i, ai) in diag.iter().enumerate() {
            let r = stability_test(&StateVector::basis(n, i).unwrap(), &a, &spec, &grid, 50, seed).unwrap();
            prop_assert!(r.expectation_variance <= 1e-20 && r.return_variance <= 1e-20);
            prop_assert!((r.expectation_mean[0] - ai).abs() <= 1e-12);
            prop_assert!(r.is_stable);
        }
    }

    #[test]
    fn summaries_do_not_depend_on_worker_count(seed in any::<u64>(), kind in 0u8..3, workers in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = herm(&random_hermitian(3, &mut rng), 3);
        let spec = spec_for(kind, 0.8, &a, herm(&random_hermitian(3, &mut rng), 3));
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let run = || ensemble_average_operator(&a, &spec, &grid, 300, seed).unwrap().mean().clone();
        let one = with_workers(Some(1), run).unwrap();
        let many = with_workers(Some(workers), run).unwrap();
        prop_assert!(one.as_slice().iter().zip(many.as_slice()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }
}

#[test]
fn decay_target_is_grid_independent() {
    for slices in [100, 200, 400, 800] {
        let grid = TimeGrid::new(1.0, slices).unwrap();
        assert_eq!(dephasing_factor(1.0, grid.tau()), (-1.0f64).exp());
    }
}

#[test]
fn gue_mean_operator_contracts_spectral_radius() {
    let a = HermitianOperator::from_real_diagonal(&[-1.5, -0.5, 0.5, 1.5]);
    let spec = EnsembleSpec::gue_perturbed(0.5, HermitianOperator::zeros(4)).unwrap();
    let s = ensemble_average_operator(&a, &spec, &TimeGrid::new(1.0, 50).unwrap(), 400, 9).unwrap();
    let radius = sorted_eigenvalues(&s.mean_operator()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(radius < 1.5 - 1e-3, "{radius}");
}

#[test]
fn dephasing_decay_is_refinement_stable() {
    // Standardized deviations over several seeds on two grids: no single
    // outlier beyond 4.5 and no common bias in the mean.
    let rho0 = DensityMatrix::from_pure(&StateVector::plus());
    let basis = spectral_decompose_default(&HermitianOperator::sigma_z()).unwrap();
    let spec = EnsembleSpec::dephasing(1.0, HermitianOperator::zeros(2), basis).unwrap();
    let mut zs = Vec::new();
    for slices in [100, 200] {
        for seed in 0..5 {
            let s = ensemble_average_state(&rho0, &spec, &TimeGrid::new(1.0, slices).unwrap(), 10_000, seed).unwrap();
            zs.push((s.mean()[(0, 1)].norm() - 0.5 * (-1.0f64).exp()) / s.magnitude_standard_error(0, 1));
        }
    }
    let mean = zs.iter().sum::<f64>() / zs.len() as f64;
    assert!(zs.iter().all(|z| z.abs() <= 4.5), "{zs:?}");
    assert!(mean.abs() <= 1.5, "mean z {mean}: {zs:?}");
}
