//! Conditional expectations on the joint system ⊗ observer space.
//!
//! Tensor ordering is system-first everywhere: a joint index is
//! `s · d_o + o`. A system observable `A_s` acts on the joint space as
//! `A_s ⊗ I_o` and the observer conditioning projector is `I_s ⊗ |ψ⟩⟨ψ|`.
//!
//! Evolution uses `ρ_τ = e^{-iHτ} ρ_0 e^{iHτ}`, which pairs with the
//! Heisenberg operator `e^{iH_sτ} A_s e^{-iH_sτ}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::operators::check_same_dim;
use crate::linalg::{
    conjugate, matrix_exponential, partial_trace_matrix, projector_from_state, tensor_product, ComplexMatrix,
    DensityMatrix, HermitianOperator, Keep, StateVector,
};
use crate::smi::{channel_from_trajectory, dress_operator, sample_trajectory, EnsembleSpec, Ordering, TimeGrid};

/// Denominators at or below this are treated as conditioning on a null event.
pub const NULL_CONDITIONING_TOL: f64 = 1e-12;

/// Slices used by the zero-noise dressed route of the limit check.
pub const LIMIT_CHECK_SLICES: usize = 16;

#[derive(Clone, Debug)]
pub struct JointSystemConfig {
    h_s0: HermitianOperator,
    h_o0: HermitianOperator,
    h_i: HermitianOperator,
    h_total: HermitianOperator,
}

impl JointSystemConfig {
    pub fn new(h_s0: HermitianOperator, h_o0: HermitianOperator, h_i: HermitianOperator) -> Result<Self> {
        let (ds, d_o) = (h_s0.dim(), h_o0.dim());
        check_same_dim(h_i.dim(), ds * d_o, "interaction Hamiltonian")?;
        let lift_s = tensor_product(h_s0.matrix(), &ComplexMatrix::identity(d_o));
        let lift_o = tensor_product(&ComplexMatrix::identity(ds), h_o0.matrix());
        let total = &(&lift_s + &lift_o) + h_i.matrix();
        Ok(Self { h_total: HermitianOperator::new(total)?, h_s0, h_o0, h_i })
    }

    /// No interaction: `H_I = 0`.
    pub fn decoupled(h_s0: HermitianOperator, h_o0: HermitianOperator) -> Result<Self> {
        let d = h_s0.dim() * h_o0.dim();
        Self::new(h_s0, h_o0, HermitianOperator::zeros(d))
    }

    pub fn system_dim(&self) -> usize {
        self.h_s0.dim()
    }

    pub fn observer_dim(&self) -> usize {
        self.h_o0.dim()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.system_dim(), self.observer_dim())
    }

    pub fn h_s0(&self) -> &HermitianOperator {
        &self.h_s0
    }

    pub fn h_o0(&self) -> &HermitianOperator {
        &self.h_o0
    }

    pub fn h_i(&self) -> &HermitianOperator {
        &self.h_i
    }

    pub fn h_total(&self) -> &HermitianOperator {
        &self.h_total
    }

    pub fn is_decoupled(&self) -> bool {
        self.h_i.matrix().max_abs() == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionalExpectationResult {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// `ρ_τ = e^{-iHτ} ρ_0 e^{iHτ}` on the joint space.
pub fn joint_evolve(rho0: &DensityMatrix, config: &JointSystemConfig, tau: f64) -> Result<DensityMatrix> {
    check_same_dim(rho0.dim(), config.h_total.dim(), "joint_evolve")?;
    let u = matrix_exponential(&config.h_total, -tau)?;
    Ok(DensityMatrix::from_trusted(conjugate(rho0.matrix(), &u)?.hermitian_part()))
}

/// `ψ_o(τ) = e^{-iH_oτ} ψ_o(0)`.
pub fn evolve_observer(psi_o0: &StateVector, h_o: &HermitianOperator, tau: f64) -> Result<StateVector> {
    check_same_dim(psi_o0.dim(), h_o.dim(), "evolve_observer")?;
    let u = matrix_exponential(h_o, -tau)?;
    StateVector::normalized(u.matrix().apply(psi_o0.amplitudes()))
}

fn conditioning_projector(psi_o: &StateVector, ds: usize) -> ComplexMatrix {
    tensor_product(&ComplexMatrix::identity(ds), projector_from_state(psi_o).matrix())
}

fn check_joint(rho_dim: usize, dims: (usize, usize), psi_dim: usize) -> Result<()> {
    check_same_dim(rho_dim, dims.0 * dims.1, "joint density matrix")?;
    check_same_dim(psi_dim, dims.1, "observer state")
}

/// `tr[(A_s ⊗ I_o) P_τ ρ_τ] / tr[P_τ ρ_τ]` with `P_τ = I_s ⊗ |ψ_o(τ)⟩⟨ψ_o(τ)|`.
pub fn conditional_expectation(
    a_s: &HermitianOperator,
    rho_tau: &DensityMatrix,
    psi_o_tau: &StateVector,
    dims: (usize, usize),
) -> Result<ConditionalExpectationResult> {
    check_joint(rho_tau.dim(), dims, psi_o_tau.dim())?;
    check_same_dim(a_s.dim(), dims.0, "system observable")?;
    let p = conditioning_projector(psi_o_tau, dims.0);
    let p_rho = &p * rho_tau.matrix();
    let denominator = p_rho.trace().re;
    if denominator <= NULL_CONDITIONING_TOL {
        return Err(Error::NullConditioning(denominator));
    }
    let a = tensor_product(a_s.matrix(), &ComplexMatrix::identity(dims.1));
    let numerator = (&a * &p_rho).trace().re;
    Ok(ConditionalExpectationResult { value: numerator / denominator, numerator, denominator })
}

/// `tr_o[P_0 ρ_0] / tr[P_0 ρ_0]`.
pub fn relative_density(rho0: &DensityMatrix, psi_o0: &StateVector, dims: (usize, usize)) -> Result<DensityMatrix> {
    check_joint(rho0.dim(), dims, psi_o0.dim())?;
    let p = conditioning_projector(psi_o0, dims.0);
    let p_rho_p = &(&p * rho0.matrix()) * &p;
    let denominator = p_rho_p.trace().re;
    if denominator <= NULL_CONDITIONING_TOL {
        return Err(Error::NullConditioning(denominator));
    }
    let reduced = partial_trace_matrix(&p_rho_p, dims, Keep::Left)?.scale_real(1.0 / denominator);
    DensityMatrix::new(reduced.hermitian_part())
}

/// `tr[e^{iH_sτ} A_s e^{-iH_sτ} ρ_s0]`.
pub fn pw_heisenberg_expectation(
    a_s: &HermitianOperator,
    h_s: &HermitianOperator,
    rho_s0: &DensityMatrix,
    tau: f64,
) -> Result<f64> {
    check_same_dim(a_s.dim(), h_s.dim(), "pw_heisenberg_expectation")?;
    check_same_dim(a_s.dim(), rho_s0.dim(), "pw_heisenberg_expectation")?;
    let u = matrix_exponential(h_s, tau)?;
    let a_tau = HermitianOperator::from_trusted(conjugate(a_s.matrix(), &u)?.hermitian_part());
    a_tau.expectation(rho_s0)
}

/// The three routes of the limit check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitRoutes {
    pub joint: f64,
    pub heisenberg: f64,
    pub dressed: f64,
}

impl LimitRoutes {
    pub fn max_discrepancy(&self) -> f64 {
        let d1 = (self.joint - self.heisenberg).abs();
        let d2 = (self.joint - self.dressed).abs();
        let d3 = (self.heisenberg - self.dressed).abs();
        d1.max(d2).max(d3)
    }
}

/// Evaluates the joint conditional expectation, the Heisenberg reference and
/// the zero-noise dressed expectation for the separable start
/// `ρ_s0 ⊗ |ψ_o0⟩⟨ψ_o0|`. Requires `H_I = 0`.
pub fn limit_routes(
    config: &JointSystemConfig,
    a_s: &HermitianOperator,
    rho_s0: &DensityMatrix,
    psi_o0: &StateVector,
    tau: f64,
) -> Result<LimitRoutes> {
    if !config.is_decoupled() {
        return Err(Error::config(
            "limit consistency check is only defined for H_I = 0 (the interacting case has no reference value)",
        ));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::config(format!("tau must be finite and >= 0, got {tau}")));
    }
    let dims = config.dims();
    check_same_dim(a_s.dim(), dims.0, "system observable")?;
    check_same_dim(rho_s0.dim(), dims.0, "system state")?;
    check_same_dim(psi_o0.dim(), dims.1, "observer state")?;

    let rho0 = DensityMatrix::from_trusted(tensor_product(
        rho_s0.matrix(),
        projector_from_state(psi_o0).matrix(),
    ));
    let rho_tau = joint_evolve(&rho0, config, tau)?;
    let psi_o_tau = evolve_observer(psi_o0, config.h_o0(), tau)?;
    let joint = conditional_expectation(a_s, &rho_tau, &psi_o_tau, dims)?.value;

    let heisenberg = pw_heisenberg_expectation(a_s, config.h_s0(), rho_s0, tau)?;

    let dressed = if tau == 0.0 {
        a_s.expectation(rho_s0)?
    } else {
        let grid = TimeGrid::new(tau, LIMIT_CHECK_SLICES)?;
        let spec = EnsembleSpec::zero_noise(config.h_s0().clone());
        let traj = sample_trajectory(&spec, &grid, 0, 0);
        let channel = channel_from_trajectory(&traj, Ordering::TimeOrdered)?;
        dress_operator(a_s, &channel)?.expectation(rho_s0)?
    };
    Ok(LimitRoutes { joint, heisenberg, dressed })
}

/// Max pairwise discrepancy of [`limit_routes`].
pub fn limit_consistency_check(
    config: &JointSystemConfig,
    a_s: &HermitianOperator,
    rho_s0: &DensityMatrix,
    psi_o0: &StateVector,
    tau: f64,
) -> Result<f64> {
    Ok(limit_routes(config, a_s, rho_s0, psi_o0, tau)?.max_discrepancy())
}

/// `(tr[A P ρ], tr[A P' ρ'])` where the primed quantities are conjugated by
/// `I_s ⊗ e^{iH_o t}`. Equal whenever `A = A_s ⊗ I_o`.
pub fn observer_rotation_identity(
    a_s: &HermitianOperator,
    rho: &DensityMatrix,
    psi_o: &StateVector,
    h_o: &HermitianOperator,
    t: f64,
) -> Result<(f64, f64)> {
    let dims = (a_s.dim(), h_o.dim());
    check_joint(rho.dim(), dims, psi_o.dim())?;
    let a = tensor_product(a_s.matrix(), &ComplexMatrix::identity(dims.1));
    let p = conditioning_projector(psi_o, dims.0);
    let direct = (&(&a * &p) * rho.matrix()).trace().re;

    let v = matrix_exponential(h_o, t)?;
    let u = crate::linalg::UnitaryOperator::new(tensor_product(&ComplexMatrix::identity(dims.0), v.matrix()))?;
    let p_rot = conjugate(&p, &u)?;
    let rho_rot = conjugate(rho.matrix(), &u)?;
    let rotated = (&(&a * &p_rot) * &rho_rot).trace().re;
    Ok((direct, rotated))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::random::{gue, random_density, random_state};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tensor_ordering_is_system_first() {
        // σ_z on S, identity on O: diag(1, 1, -1, -1) for 2 ⊗ 2.
        let a = tensor_product(HermitianOperator::sigma_z().matrix(), &ComplexMatrix::identity(2));
        assert_eq!(a, ComplexMatrix::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
        // |s=1⟩|o=0⟩ sits at joint index 1·2 + 0.
        let ket = StateVector::basis(4, 2).unwrap();
        let rho = DensityMatrix::from_pure(&ket);
        let r = conditional_expectation(&HermitianOperator::sigma_z(), &rho, &StateVector::basis(2, 0).unwrap(), (2, 2))
            .unwrap();
        assert_eq!(r.value, -1.0);
        assert!(matches!(
            conditional_expectation(&HermitianOperator::sigma_z(), &rho, &StateVector::basis(2, 1).unwrap(), (2, 2)),
            Err(Error::NullConditioning(_))
        ));
    }

    #[test]
    fn evolve_at_zero_and_stationary() {
        let h_i = HermitianOperator::new(tensor_product(
            HermitianOperator::sigma_z().matrix(),
            HermitianOperator::sigma_z().matrix(),
        ))
        .unwrap();
        let cfg = JointSystemConfig::new(HermitianOperator::sigma_x(), HermitianOperator::sigma_z(), h_i.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(4, &mut rng);
        assert!(joint_evolve(&rho, &cfg, 0.0).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let cfg = JointSystemConfig::new(HermitianOperator::zeros(2), HermitianOperator::zeros(2), h_i).unwrap();
        let diag = DensityMatrix::from_probabilities(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        for tau in [0.3, 1.7, 12.0] {
            assert!(joint_evolve(&diag, &cfg, tau).unwrap().matrix().max_abs_diff(diag.matrix()) < 1e-15);
        }
    }

    #[test]
    fn ising_closed_form() {
        let zz = tensor_product(HermitianOperator::sigma_z().matrix(), HermitianOperator::sigma_z().matrix());
        let cfg =
            JointSystemConfig::new(HermitianOperator::zeros(2), HermitianOperator::zeros(2), HermitianOperator::new(zz).unwrap())
                .unwrap();
        let plus_plus = StateVector::uniform(4).unwrap();
        let rho = joint_evolve(&DensityMatrix::from_pure(&plus_plus), &cfg, FRAC_PI_4).unwrap();
        // Component |ab⟩ picks up e^{-iτ s_a s_b}, s = ±1.
        let signs = [1.0, -1.0, -1.0, 1.0];
        let psi: Vec<Complex64> = signs.iter().map(|&s| Complex64::from_polar(0.5, -FRAC_PI_4 * s)).collect();
        let expected = ComplexMatrix::outer(&psi, &psi);
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn spectrum_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = JointSystemConfig::new(gue(2, &mut rng), gue(3, &mut rng), gue(6, &mut rng)).unwrap();
        let rho = random_density(6, &mut rng);
        let before = HermitianOperator::new(rho.matrix().clone()).unwrap().eigenvalues().unwrap();
        let after = joint_evolve(&rho, &cfg, 2.3).unwrap();
        let after = HermitianOperator::new(after.matrix().clone()).unwrap().eigenvalues().unwrap();
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_conditioning_and_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho_s = random_density(2, &mut rng);
        let psi = random_state(3, &mut rng);
        let joint = DensityMatrix::from_trusted(tensor_product(rho_s.matrix(), projector_from_state(&psi).matrix()));
        let a = gue(2, &mut rng);
        let r = conditional_expectation(&a, &joint, &psi, (2, 3)).unwrap();
        assert!((r.value - a.expectation(&rho_s).unwrap()).abs() < 1e-12);
        assert_eq!(r.value, r.numerator / r.denominator);
        let one = conditional_expectation(&HermitianOperator::identity(2), &joint, &psi, (2, 3)).unwrap();
        assert!((one.value - 1.0).abs() < 1e-14);

        let rel = relative_density(&joint, &psi, (2, 3)).unwrap();
        assert!(rel.matrix().max_abs_diff(rho_s.matrix()) < 1e-12);
    }

    #[test]
    fn entangled_conditioning_matches_projection() {
        // (|00⟩ + 2i|11⟩ + |10⟩)/√6
        let psi =
            StateVector::normalized(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 2.0)]).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let r = conditional_expectation(&HermitianOperator::sigma_z(), &rho, &StateVector::basis(2, 0).unwrap(), (2, 2))
            .unwrap();
        // Projection onto o = 0 keeps amplitudes at joint indices 0 and 2: (1, 1)/√6.
        let kept = [psi.amplitudes()[0], psi.amplitudes()[2]];
        let norm: f64 = kept.iter().map(|z| z.norm_sqr()).sum();
        let expected = (kept[0].norm_sqr() - kept[1].norm_sqr()) / norm;
        assert!((r.value - expected).abs() < 1e-14);
        assert!((r.denominator - norm).abs() < 1e-14);

        let bell = StateVector::normalized(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rel = relative_density(&DensityMatrix::from_pure(&bell), &StateVector::basis(2, 0).unwrap(), (2, 2)).unwrap();
        assert!(rel.matrix().max_abs_diff(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-14);

        let zero_overlap = DensityMatrix::from_pure(&StateVector::basis(4, 1).unwrap());
        assert!(matches!(
            relative_density(&zero_overlap, &StateVector::basis(2, 0).unwrap(), (2, 2)),
            Err(Error::NullConditioning(_))
        ));
    }

    #[test]
    fn heisenberg_rabi_oracle() {
        let rho = DensityMatrix::from_pure(&StateVector::basis(2, 0).unwrap());
        for k in 0..20 {
            let tau = 0.17 * k as f64;
            let v = pw_heisenberg_expectation(&HermitianOperator::sigma_z(), &HermitianOperator::sigma_x(), &rho, tau)
                .unwrap();
            assert!((v - (2.0 * tau).cos()).abs() < 1e-13, "tau {tau}: {v}");
        }
        // Commuting H_s leaves the value constant.
        let plus = DensityMatrix::from_pure(&StateVector::plus());
        for tau in [0.0, 0.4, 3.0] {
            let v = pw_heisenberg_expectation(&HermitianOperator::sigma_x(), &HermitianOperator::sigma_x(), &plus, tau)
                .unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn limit_check_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d_o in [2, 3] {
            for _ in 0..10 {
                let cfg = JointSystemConfig::decoupled(gue(2, &mut rng), gue(d_o, &mut rng)).unwrap();
                let a = gue(2, &mut rng);
                let rho_s = random_density(2, &mut rng);
                let psi = random_state(d_o, &mut rng);
                assert!(limit_consistency_check(&cfg, &a, &rho_s, &psi, 1.3).unwrap() <= 1e-10);
                assert!(limit_consistency_check(&cfg, &a, &rho_s, &psi, 0.0).unwrap() <= 1e-12);
                let id = limit_routes(&cfg, &HermitianOperator::identity(2), &rho_s, &psi, 0.8).unwrap();
                assert!(id.max_discrepancy() <= 1e-12 && (id.joint - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn limit_check_rejects_interaction() {
        let zz = tensor_product(HermitianOperator::sigma_z().matrix(), HermitianOperator::sigma_z().matrix());
        let cfg =
            JointSystemConfig::new(HermitianOperator::zeros(2), HermitianOperator::zeros(2), HermitianOperator::new(zz).unwrap())
                .unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let r = limit_consistency_check(&cfg, &HermitianOperator::sigma_z(), &rho, &StateVector::plus(), 1.0);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn observer_rotation_leaves_trace_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let a = gue(2, &mut rng);
            let rho = random_density(6, &mut rng);
            let psi = random_state(3, &mut rng);
            let h_o = gue(3, &mut rng);
            let (d, r) = observer_rotation_identity(&a, &rho, &psi, &h_o, 0.9).unwrap();
            assert!((d - r).abs() < 1e-10);
        }
    }
}
