//! Configuration-driven experiments: parsing, seeded runs and sweeps,
//! reports and the verification suite.

pub mod config;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{parse_config, ExperimentConfig, ExperimentKind, OutputFormat};
pub use report::{emit_report, render, render_csv, render_json, to_precise_json};
pub use run::{
    config_digest, run_experiment, run_experiment_with_workers, run_sweep, run_sweep_with_workers, sweep_points,
    worker_count_from_env, RunResult, VERSION, WORKERS_ENV,
};
pub use verify::{run_check, verify_suite, CheckOutcome, VerifyOptions, VerifyReport, CHECK_NAMES};
