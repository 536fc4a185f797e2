//! `smi-lab`: runs configured dressing experiments, sweeps, the built-in
//! verification suite and the fine-graining baseline.
//!
//! Exit codes: 0 success, 1 configuration or domain error, 2 a verification
//! check failed, 3 I/O error. The worker pool size is read from
//! `SMI_LAB_WORKERS` (unset or 0 means one worker per core); results do not
//! depend on it.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smi_core::experiment::run::{run_experiment_with_workers, run_sweep_with_workers, worker_count_from_env, with_workers, RunResult};
use smi_core::experiment::{
    emit_report, parse_config, render, render_json, to_precise_json, verify_suite, ExperimentConfig, ExperimentKind,
    VerifyOptions, VerifyReport,
};
use smi_core::Error;

#[derive(Parser)]
#[command(name = "smi-lab", version, about = "Stochastic operator dressing lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout (overrides `output.path`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the lambda x tau product of a config's list values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in verification checks.
    Verify {
        /// Only run checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Swap the time-ordered product for the naive sum (the suite must fail).
        #[arg(long, hide = true)]
        inject_naive_sum: bool,
    },
    /// Fine-grain squared amplitudes into an equal-weight state.
    Baseline {
        /// Comma-separated squared amplitudes summing to 1.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        alpha_sq: Vec<f64>,
        /// Largest fine-grained dimension to search.
        #[arg(long)]
        cap: Option<u64>,
    },
}

enum Failure {
    Error(Error),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(2),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let workers = worker_count_from_env()?;
    match command {
        Command::Run { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            let result = run_experiment_with_workers(&cfg, workers)?;
            let failed = result.kind == ExperimentKind::VerifySuite && result.payload["all_passed"] == false;
            write_results(&cfg, std::slice::from_ref(&result), out.as_deref())?;
            if failed {
                return Err(Failure::Verify);
            }
        }
        Command::Sweep { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            let results = run_sweep_with_workers(&cfg, workers)?;
            write_results(&cfg, &results, out.as_deref())?;
        }
        Command::Verify { filter, out, inject_naive_sum } => {
            let opts = VerifyOptions { filter, inject_naive_sum };
            let report = with_workers(workers, || verify_suite(&opts))??;
            print_verify(&report);
            if let Some(path) = out {
                write_text(&path, &(to_precise_json(&report)? + "\n"))?;
            }
            if !report.all_passed {
                return Err(Failure::Verify);
            }
        }
        Command::Baseline { alpha_sq, cap } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::BaselineEnvariance);
            cfg.baseline.alpha_sq = Some(alpha_sq);
            if let Some(cap) = cap {
                cfg.baseline.cap = cap;
            }
            cfg.validate()?;
            let result = run_experiment_with_workers(&cfg, workers)?;
            print!("{}", render_json(std::slice::from_ref(&result))?);
        }
    }
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn write_results(cfg: &ExperimentConfig, results: &[RunResult], out: Option<&Path>) -> Result<(), Error> {
    match out.or(cfg.output.path.as_deref()) {
        Some(path) => {
            emit_report(results, path, cfg.output.format)?;
            for r in results {
                eprintln!("{} {} -> {}", r.kind, r.config_digest, path.display());
            }
            Ok(())
        }
        None => {
            print!("{}", render(results, cfg.output.format)?);
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.display().to_string(), source: e })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

fn print_verify(report: &VerifyReport) {
    for check in &report.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<22} {:>8.2}s  {}", check.name, check.seconds, check.config_digest);
        for m in &check.measurements {
            let mark = if m.passed { "ok" } else { "!!" };
            println!("    [{mark}] {}: {:.6e} {} {:.3e}", m.label, m.value, m.relation.symbol(), m.bound);
        }
        if let Some(err) = &check.error {
            println!("    error: {err}");
        }
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    println!("{passed}/{} checks passed", report.checks.len());
}
