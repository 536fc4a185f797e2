//! Runs and sweeps.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind};
use super::verify::{verify_suite, VerifyOptions};
use crate::einselection::{build_coarse_state_from_multiplicities, coarse_probabilities, fine_grain, TripartiteDims};
use crate::error::{Error, Result};
use crate::lab::{
    decay_curve, decoherence_metrics, reduced_operator_check, stability_test, superselection_uniformity,
};
use crate::linalg::random::{gue, random_density, random_state};
use crate::linalg::{spectral_decompose_default, ComplexMatrix, HermitianOperator};
use crate::pw::{limit_routes, JointSystemConfig};
use crate::smi::rng::derive_seed;
use crate::smi::{ensemble_average_operator, ensemble_average_state, EnsembleSpec, TimeGrid};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Overrides the worker count; unset or `0` means auto-detect.
pub const WORKERS_ENV: &str = "SMI_LAB_WORKERS";

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    pub config_digest: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub wall_clock_seconds: f64,
    pub payload: Value,
    pub errors: Vec<String>,
}

/// SHA-256 of the canonical (key-sorted, compact) JSON form of `value`.
pub fn digest_json<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value).and_then(|v| serde_json::to_vec(&v)).expect("serializable");
    hex::encode(Sha256::digest(&canonical))
}

pub fn config_digest(cfg: &ExperimentConfig) -> String {
    digest_json(cfg)
}

pub fn worker_count_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::config(format!("{WORKERS_ENV}={s:?} is not a worker count"))),
        },
    }
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::config(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    run_experiment_with_workers(cfg, worker_count_from_env()?)
}

pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RunResult> {
    with_workers(workers, || execute(cfg))?
}

/// Expands list-valued `ensemble.lambda` × `grid.tau` into independent
/// points; point `i` uses seed `derive_seed(master_seed, i)`.
pub fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<ExperimentConfig>> {
    if cfg.ensemble.lambda.is_empty() || cfg.grid.tau.is_empty() {
        return Err(Error::config("sweep axis is empty"));
    }
    let mut points = Vec::new();
    for &lambda in &cfg.ensemble.lambda {
        for &tau in &cfg.grid.tau {
            let mut p = cfg.clone();
            p.ensemble.lambda = vec![lambda];
            p.grid.tau = vec![tau];
            p.master_seed = derive_seed(cfg.master_seed, points.len() as u64);
            points.push(p);
        }
    }
    Ok(points)
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    run_sweep_with_workers(cfg, worker_count_from_env()?)
}

pub fn run_sweep_with_workers(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<RunResult>> {
    let points = sweep_points(cfg)?;
    with_workers(workers, || points.iter().map(execute).collect::<Result<Vec<_>>>())?
}

fn execute(cfg: &ExperimentConfig) -> Result<RunResult> {
    let start = Instant::now();
    cfg.validate()?;
    let lists = match cfg.kind {
        ExperimentKind::DecayCurve => cfg.ensemble.lambda.len() > 1,
        _ => cfg.is_sweep(),
    };
    if lists {
        return Err(Error::config(format!(
            "{}: list-valued lambda or tau is only accepted by sweep",
            cfg.kind
        )));
    }
    let mut errors = Vec::new();
    let payload = match cfg.kind {
        ExperimentKind::DecayCurve => run_decay(cfg),
        ExperimentKind::Stability => run_stability(cfg),
        ExperimentKind::EnsembleAverage => run_average(cfg),
        ExperimentKind::BaselineEnvariance => run_baseline(cfg),
        ExperimentKind::PwConsistency => run_pw(cfg),
        ExperimentKind::VerifySuite => run_verify(&mut errors),
    }
    .map_err(|e| e.context(cfg.kind.as_str()))?;
    Ok(RunResult {
        config_digest: config_digest(cfg),
        version: VERSION.to_string(),
        kind: cfg.kind,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        payload,
        errors,
    })
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Numerical(format!("cannot serialize payload: {e}")))
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.rows()).map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    json!(rows)
}

struct Setup {
    observable: HermitianOperator,
    spec: EnsembleSpec,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let observable = cfg.observable_operator()?;
    let dim = observable.dim();
    let decomp = spectral_decompose_default(&observable)?;
    let base = cfg.base_hamiltonian(dim)?;
    let mut spec = EnsembleSpec::new(cfg.ensemble.kind, cfg.ensemble.lambda[0], base, Some(decomp))?;
    if let Some(total) = cfg.total_hamiltonian(dim)? {
        spec = spec.with_total(total)?;
    }
    Ok(Setup { observable, spec })
}

fn scalar_grid(cfg: &ExperimentConfig) -> Result<TimeGrid> {
    TimeGrid::with_density(cfg.grid.tau[0], cfg.grid.slices)
}

fn run_decay(cfg: &ExperimentConfig) -> Result<Value> {
    let s = setup(cfg)?;
    let rho0 = cfg.initial_state(&s.observable)?.density();
    let curve = decay_curve(&rho0, &s.spec, &cfg.grid.tau, cfg.grid.slices, cfg.n_trajectories, cfg.master_seed)?;
    Ok(json!({
        "ensemble": s.spec.kind(),
        "lambda": s.spec.lambda(),
        "n_trajectories": cfg.n_trajectories,
        "slices_per_unit_time": cfg.grid.slices,
        "curve": to_value(&curve)?,
    }))
}

fn run_stability(cfg: &ExperimentConfig) -> Result<Value> {
    let s = setup(cfg)?;
    let state = cfg.initial_state(&s.observable)?;
    let psi = state.pure().ok_or_else(|| Error::config("state: stability needs a pure state"))?;
    let grid = scalar_grid(cfg)?;
    let report = stability_test(psi, &s.observable, &s.spec, &grid, cfg.n_trajectories, cfg.master_seed)?;
    Ok(json!({
        "ensemble": s.spec.kind(),
        "lambda": s.spec.lambda(),
        "tau": grid.tau(),
        "slices": grid.slices(),
        "n_trajectories": cfg.n_trajectories,
        "report": to_value(&report)?,
    }))
}

fn run_average(cfg: &ExperimentConfig) -> Result<Value> {
    let s = setup(cfg)?;
    let decomp = s.spec.measurement().expect("set by setup").clone();
    let rho0 = cfg.initial_state(&s.observable)?.density();
    let grid = scalar_grid(cfg)?;
    let n = cfg.n_trajectories;

    let states = ensemble_average_state(&rho0, &s.spec, &grid, n, cfg.master_seed)?;
    let mean_state = states.mean_state()?;
    let metrics = decoherence_metrics(&mean_state, &rho0, &decomp)?;

    let ops = ensemble_average_operator(&s.observable, &s.spec, &grid, n, cfg.master_seed)?;
    let (offdiag, drift) = reduced_operator_check(&ops, &decomp)?;
    let uniformity = superselection_uniformity(&ops, &decomp)?;
    Ok(json!({
        "ensemble": s.spec.kind(),
        "lambda": s.spec.lambda(),
        "tau": grid.tau(),
        "slices": grid.slices(),
        "n_trajectories": n,
        "state": {
            "mean": matrix_json(mean_state.matrix()),
            "metrics": to_value(&metrics)?,
            "monte_carlo_error": states.monte_carlo_error(),
        },
        "operator": {
            "mean": matrix_json(ops.mean()),
            "offdiagonal_block_norm": offdiag,
            "diagonal_block_drift": drift,
            "uniformity": to_value(&uniformity)?,
            "monte_carlo_error": ops.monte_carlo_error(),
        },
    }))
}

fn run_baseline(cfg: &ExperimentConfig) -> Result<Value> {
    let alpha = cfg.baseline.alpha_sq.as_ref().ok_or_else(|| Error::config("baseline.alpha_sq: required"))?;
    let approx = fine_grain(alpha, cfg.baseline.cap)?;
    // Zero targets get no fine-grained support.
    let blocks: Vec<u64> = approx.numerators.iter().copied().filter(|&m| m > 0).collect();
    let m = approx.denominator as usize;
    let state = build_coarse_state_from_multiplicities(&blocks, TripartiteDims::minimal(blocks.len(), m))?;
    let mut nonzero = coarse_probabilities(&state).into_iter();
    let probs: Vec<String> = approx
        .numerators
        .iter()
        .map(|&k| match k {
            0 => "0/1".to_string(),
            _ => {
                let p = nonzero.next().expect("one probability per nonzero block");
                format!("{}/{}", p.numer(), p.denom())
            }
        })
        .collect();
    let floats: Vec<f64> = approx.numerators.iter().map(|&k| k as f64 / approx.denominator as f64).collect();
    Ok(json!({
        "approximation": to_value(&approx)?,
        "fine_count": m,
        "coarse_probabilities": probs,
        "coarse_probabilities_f64": floats,
    }))
}

fn run_pw(cfg: &ExperimentConfig) -> Result<Value> {
    let tau = cfg.grid.tau[0];
    let d_o = cfg.pw.observer_dim;
    let mut worst = (0usize, -1.0f64, None);
    let mut total = 0.0;
    for i in 0..cfg.pw.instances {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, i as u64));
        let joint = JointSystemConfig::decoupled(gue(2, &mut rng), gue(d_o, &mut rng))?;
        let a = gue(2, &mut rng);
        let rho = random_density(2, &mut rng);
        let psi = random_state(d_o, &mut rng);
        let routes = limit_routes(&joint, &a, &rho, &psi, tau)?;
        let d = routes.max_discrepancy();
        total += d;
        if d > worst.1 {
            worst = (i, d, Some(routes));
        }
    }
    Ok(json!({
        "instances": cfg.pw.instances,
        "system_dim": 2,
        "observer_dim": d_o,
        "tau": tau,
        "max_discrepancy": worst.1,
        "mean_discrepancy": total / cfg.pw.instances as f64,
        "worst_instance": worst.0,
        "worst_routes": to_value(&worst.2)?,
    }))
}

fn run_verify(errors: &mut Vec<String>) -> Result<Value> {
    let report = verify_suite(&VerifyOptions::default())?;
    for c in &report.checks {
        if let Some(e) = &c.error {
            errors.push(format!("{}: {e}", c.name));
        }
    }
    to_value(&report)
}
