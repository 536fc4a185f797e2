//! Built-in verification suite.
//!
//! Each check runs a fixed, seeded workload and compares measured values
//! against bounds. A check passes when all of its measurements do. Every
//! check carries the digest of its parameter set.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::to_precise_json;
use super::run::{config_digest, digest_json, run_experiment_with_workers};
use crate::einselection::{
    build_coarse_state_from_multiplicities, build_equal_state, coarse_probabilities, envariance_swap_check, fine_grain,
    TripartiteDims,
};
use crate::error::{Error, Result};
use crate::lab::{block_norms, decoherence_metrics, stability_test};
use crate::linalg::random::{gue, random_density, random_state};
use crate::linalg::{spectral_decompose_default, ComplexMatrix, DensityMatrix, HermitianOperator, StateVector};
use crate::pw::{limit_consistency_check, JointSystemConfig};
use crate::smi::rng::derive_seed;
use crate::smi::{
    channel_from_trajectory, dress_operator, ensemble_average_state, fold_channels, sample_trajectory, EnsembleSpec,
    HamiltonianTrajectory, Ordering, TimeGrid,
};

pub const CHECK_NAMES: [&str; 8] = [
    "pw-limit",
    "dephasing-decay",
    "born-diagonal",
    "eigenstate-stability",
    "einselection-exact",
    "operator-reduction",
    "time-ordering",
    "determinism",
];

const SEED: u64 = 20_240_611;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    LessThan,
    GreaterThan,
}

impl Relation {
    fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::AtMost => value <= bound,
            Relation::LessThan => value < bound,
            Relation::GreaterThan => value > bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::LessThan => "<",
            Relation::GreaterThan => ">",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

fn measure(label: impl Into<String>, value: f64, relation: Relation, bound: f64) -> Measurement {
    Measurement { label: label.into(), value, relation, bound, passed: relation.holds(value, bound) }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub config_digest: String,
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub all_passed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Run only checks whose name contains this string.
    pub filter: Option<String>,
    /// Replace the time-ordered product with the naive sum in the
    /// time-ordering check.
    pub inject_naive_sum: bool,
}

pub fn verify_suite(opts: &VerifyOptions) -> Result<VerifyReport> {
    let selected: Vec<&str> = CHECK_NAMES
        .iter()
        .copied()
        .filter(|n| opts.filter.as_deref().is_none_or(|f| n.contains(f)))
        .collect();
    if selected.is_empty() {
        return Err(Error::config(format!(
            "verify filter {:?} matches no check (available: {})",
            opts.filter.as_deref().unwrap_or(""),
            CHECK_NAMES.join(", ")
        )));
    }
    let checks: Vec<CheckOutcome> = selected.into_iter().map(|n| run_check(n, opts)).collect::<Result<_>>()?;
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, all_passed })
}

/// Runs one named check. Domain errors inside the check are reported as a
/// failed outcome.
pub fn run_check(name: &str, opts: &VerifyOptions) -> Result<CheckOutcome> {
    let start = Instant::now();
    let (params, result) = match name {
        "pw-limit" => pw_limit(),
        "dephasing-decay" => dephasing_decay(),
        "born-diagonal" => born_diagonal(),
        "eigenstate-stability" => eigenstate_stability(),
        "einselection-exact" => einselection_exact(),
        "operator-reduction" => operator_reduction(),
        "time-ordering" => time_ordering(opts.inject_naive_sum),
        "determinism" => determinism(),
        other => return Err(Error::config(format!("unknown check {other:?}"))),
    };
    let digest = match &params {
        Value::String(s) => s.clone(),
        p => digest_json(&json!({"check": name, "params": p})),
    };
    let (measurements, error) = match result {
        Ok(m) => (m, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let passed = error.is_none() && !measurements.is_empty() && measurements.iter().all(|m| m.passed);
    Ok(CheckOutcome {
        name: name.to_string(),
        passed,
        measurements,
        config_digest: digest,
        error,
        seconds: start.elapsed().as_secs_f64(),
    })
}

type CheckResult = (Value, Result<Vec<Measurement>>);

fn sz_dephasing(lambda: f64) -> Result<EnsembleSpec> {
    let basis = spectral_decompose_default(&HermitianOperator::sigma_z())?;
    EnsembleSpec::dephasing(lambda, HermitianOperator::zeros(2), basis)
}

fn pw_limit() -> CheckResult {
    let params = json!({"instances": 100, "dims": [2, 2], "tau": [0.1, 2.0], "seed": SEED});
    let run = || -> Result<Vec<Measurement>> {
        let mut worst = 0.0f64;
        for i in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(SEED, i));
            let cfg = JointSystemConfig::decoupled(gue(2, &mut rng), gue(2, &mut rng))?;
            let a = gue(2, &mut rng);
            let rho = random_density(2, &mut rng);
            let psi = random_state(2, &mut rng);
            let tau = rng.random_range(0.1..2.0);
            worst = worst.max(limit_consistency_check(&cfg, &a, &rho, &psi, tau)?);
        }
        Ok(vec![measure("max pairwise discrepancy over 100 instances", worst, Relation::AtMost, 1e-10)])
    };
    (params, run())
}

fn dephasing_decay() -> CheckResult {
    let points = [0.5, 1.0, 2.0];
    let params = json!({"state": "plus", "observable": "sigma_z", "tau": 1.0, "slices": 200,
                        "lambda_sq": points, "n_trajectories": 10_000, "seed": SEED});
    let run = || -> Result<Vec<Measurement>> {
        let rho0 = DensityMatrix::from_pure(&StateVector::plus());
        let grid = TimeGrid::new(1.0, 200)?;
        let mut out = Vec::new();
        for l2 in points {
            let s = ensemble_average_state(&rho0, &sz_dephasing(f64::sqrt(l2))?, &grid, 10_000, SEED)?;
            let target = 0.5 * (-l2).exp();
            let z = (s.mean()[(0, 1)].norm() - target).abs() / s.magnitude_standard_error(0, 1);
            out.push(measure(format!("lambda^2 tau = {l2}: |rho_01| deviation in standard errors"), z, Relation::AtMost, 3.0));
        }
        Ok(out)
    };
    (params, run())
}

fn born_diagonal() -> CheckResult {
    let observables: [&[f64]; 4] = [&[1.0, -1.0], &[0.0, 1.0, 3.0], &[1.0, 1.0, 2.0, -2.0], &[0.5, 1.5, -1.0, 2.0, 3.0, 4.0, -3.0, 0.0]];
    let params = json!({"observables": observables, "lambda": 1.0, "tau": 1.0, "slices": 50,
                        "n_trajectories": 200, "seed": SEED});
    let run = || -> Result<Vec<Measurement>> {
        let mut worst = 0.0f64;
        let grid = TimeGrid::new(1.0, 50)?;
        for (k, diag) in observables.iter().enumerate() {
            let a = HermitianOperator::from_real_diagonal(diag);
            let decomp = spectral_decompose_default(&a)?;
            let spec = EnsembleSpec::dephasing(1.0, HermitianOperator::zeros(diag.len()), decomp)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(SEED, k as u64));
            let rho0 = random_density(diag.len(), &mut rng);
            let mean = ensemble_average_state(&rho0, &spec, &grid, 200, SEED)?;
            for i in 0..diag.len() {
                worst = worst.max((mean.mean()[(i, i)] - rho0.matrix()[(i, i)]).norm());
            }
        }
        Ok(vec![measure("max |diag(mean state) - diag(rho0)|, dims 2..8", worst, Relation::AtMost, 1e-12)])
    };
    (params, run())
}

fn eigenstate_stability() -> CheckResult {
    let sweep = [0.25, 0.5, 1.0, 2.0, 4.0];
    let params = json!({"n_trajectories": 1000, "slices": 200, "tau": 1.0, "lambda_sq_sweep": sweep, "seed": SEED});
    let run = || -> Result<Vec<Measurement>> {
        let n = 1000;
        let grid = TimeGrid::new(1.0, 200)?;
        let mut worst = 0.0f64;

        let mut fixtures: Vec<(HermitianOperator, EnsembleSpec)> = vec![(HermitianOperator::sigma_z(), sz_dephasing(1.0)?)];
        let a3 = HermitianOperator::from_real_diagonal(&[-1.0, 0.0, 2.0]);
        let base3 = HermitianOperator::from_real_diagonal(&[0.3, -0.2, 0.5]);
        fixtures.push((a3.clone(), EnsembleSpec::dephasing(0.8, base3.clone(), spectral_decompose_default(&a3)?)?));
        fixtures.push((a3, EnsembleSpec::zero_noise(base3)));
        for (a, spec) in &fixtures {
            for i in 0..a.dim() {
                let r = stability_test(&StateVector::basis(a.dim(), i)?, a, spec, &grid, n, SEED)?;
                worst = worst.max(r.expectation_variance).max(r.return_variance);
            }
        }

        let mut variances = Vec::new();
        for l2 in sweep {
            let r = stability_test(&StateVector::plus(), &HermitianOperator::sigma_z(), &sz_dephasing(f64::sqrt(l2))?, &grid, n, SEED)?;
            variances.push(r.return_variance);
        }
        let at_one = variances[2];
        let largest_drop = variances.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        Ok(vec![
            measure("max variance over eigenstates of commuting ensembles", worst, Relation::AtMost, 1e-20),
            measure("return variance on |+> at lambda^2 tau = 1", at_one, Relation::GreaterThan, 1e-6),
            measure("largest decrease of |+> variance along lambda^2 tau", largest_drop, Relation::AtMost, 0.0),
        ])
    };
    (params, run())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn einselection_exact() -> CheckResult {
    let params = json!({"equal_state_max_m": 64, "coarse_fixture": [1, 3], "swap_max_m": 6});
    let run = || -> Result<Vec<Measurement>> {
        let mut uniform_misses = 0usize;
        for m in 1..=64usize {
            let s = build_equal_state(m, TripartiteDims::minimal(m, m))?;
            let expected = num_rational::Ratio::new(1, m as u64);
            uniform_misses += s.outcome_probabilities().iter().filter(|p| **p != expected).count();
        }
        let fixture = build_coarse_state_from_multiplicities(&[1, 3], TripartiteDims::minimal(2, 4))?;
        let probs = coarse_probabilities(&fixture);
        let approx = fine_grain(&[0.25, 0.75], 10)?;
        let coarse_ok = probs == [num_rational::Ratio::new(1, 4), num_rational::Ratio::new(3, 4)]
            && approx.numerators == [1, 3]
            && approx.denominator == 4;
        let mut swap_misses = 0usize;
        for m in 1..=6usize {
            let s = build_equal_state(m, TripartiteDims::minimal(m, m))?;
            for p in permutations(m) {
                if !envariance_swap_check(&s, &p)? {
                    swap_misses += 1;
                }
            }
        }
        Ok(vec![
            measure("outcomes with p != 1/M, M <= 64", uniform_misses as f64, Relation::AtMost, 0.0),
            measure("[1,3] fixture mismatches", if coarse_ok { 0.0 } else { 1.0 }, Relation::AtMost, 0.0),
            measure("non-invariant permutations, equal state M <= 6", swap_misses as f64, Relation::AtMost, 0.0),
        ])
    };
    (params, run())
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Log-spaced strengths from 0.01 to 1.
pub const REDUCTION_LAMBDAS: [f64; 5] = [0.01, 0.031_622_776_601_683_79, 0.1, 0.316_227_766_016_837_94, 1.0];

fn operator_reduction() -> CheckResult {
    let spectrum = [-1.5, -0.5, 0.5, 1.5];
    let params = json!({"observable": spectrum, "ensemble": "gue-perturbed", "lambda": 0.5, "tau": 1.0,
                        "slices": 200, "n": [100, 1000, 10_000], "slope_lambdas": REDUCTION_LAMBDAS,
                        "slope_rho0": [0.1, 0.2, 0.3, 0.4], "slope_n": 1000, "seed": SEED});
    let run = || -> Result<Vec<Measurement>> {
        let a = HermitianOperator::from_real_diagonal(&spectrum);
        let decomp = spectral_decompose_default(&a)?;
        let grid = TimeGrid::new(1.0, 200)?;
        let spec = EnsembleSpec::gue_perturbed(0.5, HermitianOperator::zeros(4))?;

        // Nested trajectory sets: prefixes of one seeded family.
        let checkpoints = [100usize, 1000, 10_000];
        let mut sum = ComplexMatrix::zeros(4, 4);
        let mut offdiag = Vec::new();
        fold_channels(
            &spec,
            &grid,
            10_000,
            SEED,
            Ordering::TimeOrdered,
            |k| dress_operator(&a, k),
            |l, d| {
                sum.axpy(1.0, d.matrix());
                if checkpoints.contains(&(l as usize + 1)) {
                    offdiag.push(block_norms(&sum.scale_real(1.0 / (l + 1) as f64), &decomp)?.0);
                }
                Ok(())
            },
        )?;

        let rho0 = DensityMatrix::from_probabilities(&[0.1, 0.2, 0.3, 0.4])?;
        let mut logs = (Vec::new(), Vec::new());
        for lambda in REDUCTION_LAMBDAS {
            let s = ensemble_average_state(&rho0, &spec.with_lambda(lambda)?, &grid, 1000, SEED)?;
            let dev = decoherence_metrics(&s.mean_state()?, &rho0, &decomp)?.born_deviation;
            logs.0.push(lambda.ln());
            logs.1.push(dev.ln());
        }
        let slope = least_squares_slope(&logs.0, &logs.1);
        Ok(vec![
            measure("off-diagonal norm change N=100 -> 1000", offdiag[1] - offdiag[0], Relation::LessThan, 0.0),
            measure("off-diagonal norm change N=1000 -> 10000", offdiag[2] - offdiag[1], Relation::LessThan, 0.0),
            measure("|log-log slope of born deviation - 2|", (slope - 2.0).abs(), Relation::AtMost, 0.3),
        ])
    };
    (params, run())
}

/// Two non-commuting slices: `σ_x` then `σ_z`, each for `dt = 0.5`.
pub fn non_commuting_fixture() -> Result<HamiltonianTrajectory> {
    HamiltonianTrajectory::from_slices(
        TimeGrid::new(1.0, 2)?,
        vec![HermitianOperator::sigma_x(), HermitianOperator::sigma_z()],
        0,
        0,
    )
}

fn time_ordering(inject_naive_sum: bool) -> CheckResult {
    let params = json!({"commuting": ["zero-noise dense", "dephasing sigma_z", "scaled dense"],
                        "non_commuting": "sigma_x, sigma_z; tau 1; 2 slices", "seed": SEED,
                        "inject_naive_sum": inject_naive_sum});
    let ordered = if inject_naive_sum { Ordering::NaiveSum } else { Ordering::TimeOrdered };
    let run = || -> Result<Vec<Measurement>> {
        let gap = |t: &HamiltonianTrajectory| -> Result<f64> {
            let a = channel_from_trajectory(t, ordered)?;
            let b = channel_from_trajectory(t, Ordering::NaiveSum)?;
            Ok(a.unitary().matrix().max_abs_diff(b.unitary().matrix()))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let dense = gue(3, &mut rng);
        let grid = TimeGrid::new(1.0, 100)?;
        let zero_noise = sample_trajectory(&EnsembleSpec::zero_noise(dense.clone()), &grid, SEED, 0);
        let dephasing = sample_trajectory(&sz_dephasing(1.0)?, &TimeGrid::new(1.0, 200)?, SEED, 0);
        let scaled: Vec<HermitianOperator> = (0..100).map(|m| dense.scale(1.0 + (m as f64 * 0.37).sin())).collect();
        let scaled = HamiltonianTrajectory::from_slices(grid, scaled, SEED, 0)?;
        let commuting = gap(&zero_noise)?.max(gap(&dephasing)?).max(gap(&scaled)?);
        let non_commuting = gap(&non_commuting_fixture()?)?;
        Ok(vec![
            measure("ordered vs naive on commuting fixtures", commuting, Relation::AtMost, 1e-12),
            measure("ordered vs naive on the sigma_x, sigma_z fixture", non_commuting, Relation::GreaterThan, 1e-3),
        ])
    };
    (params, run())
}

/// The decay-curve configuration replayed across worker counts.
pub fn determinism_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::DecayCurve);
    cfg.master_seed = SEED;
    cfg.n_trajectories = 1000;
    cfg.ensemble.lambda = vec![1.0];
    cfg.grid.tau = vec![0.5, 1.0, 2.0];
    cfg
}

fn determinism() -> CheckResult {
    let cfg = determinism_config();
    let digest = Value::String(config_digest(&cfg));
    let run = || -> Result<Vec<Measurement>> {
        let mut payloads = Vec::new();
        for w in [1, 2, 4, 8] {
            let r = run_experiment_with_workers(&cfg, Some(w))?;
            payloads.push(to_precise_json(&r.payload)?);
        }
        payloads.dedup();
        Ok(vec![measure(
            "distinct payloads beyond the first across 1, 2, 4, 8 workers",
            (payloads.len() - 1) as f64,
            Relation::AtMost,
            0.0,
        )])
    };
    (digest, run())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast(name: &str, inject: bool) -> CheckOutcome {
        run_check(name, &VerifyOptions { filter: None, inject_naive_sum: inject }).unwrap()
    }

    #[test]
    fn fast_checks_pass() {
        for name in ["pw-limit", "einselection-exact", "time-ordering", "born-diagonal"] {
            let c = fast(name, false);
            assert!(c.passed, "{name}: {:?}", c.measurements);
            assert_eq!(c.config_digest.len(), 64);
        }
    }

    #[test]
    fn naive_sum_injection_fails_time_ordering() {
        let c = fast("time-ordering", true);
        assert!(!c.passed);
        assert!(c.measurements[0].passed && !c.measurements[1].passed);
    }

    #[test]
    fn filter_selects_and_rejects() {
        let r = verify_suite(&VerifyOptions { filter: Some("einselection".into()), inject_naive_sum: false }).unwrap();
        assert_eq!(r.checks.len(), 1);
        assert!(r.all_passed);
        assert!(verify_suite(&VerifyOptions { filter: Some("nothing".into()), inject_naive_sum: false }).is_err());
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(least_squares_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]), 2.0);
    }
}
