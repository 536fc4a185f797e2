//! Experiment configuration documents.
//!
//! Configs are TOML. Recognized keys, with defaults:
//!
//! ```toml
//! kind = "decay-curve"        # decay-curve | stability | ensemble-average |
//!                             # baseline-envariance | pw-consistency | verify-suite
//! master_seed = 0
//! n_trajectories = 10000
//! state = "plus"              # preset or amplitudes, e.g. [[0.6, 0.0], 0.8]
//! observable = "sigma_z"      # preset or matrix rows
//!
//! [ensemble]
//! kind = "dephasing"          # zero-noise | dephasing | gue-perturbed
//! lambda = 1.0                # scalar or list (lists are swept)
//! base = "zero"               # base Hamiltonian preset or matrix
//! # total = ...               # optional total Hamiltonian
//!
//! [grid]
//! tau = 1.0                   # scalar or list
//! slices = 200                # slices per unit of tau
//!
//! [output]
//! path = "result.json"
//! format = "json"             # json | csv
//!
//! [baseline]
//! alpha_sq = [0.25, 0.75]
//! cap = 1000
//!
//! [pw]
//! instances = 100
//! observer_dim = 2
//! ```
//!
//! Operator presets: `sigma_x`, `sigma_y`, `sigma_z`, `zero`, `zero:d`,
//! `identity`, `identity:d`, `diag:[a, b, ...]`, `ising:J` (`J σ_z⊗σ_z`).
//! State presets: `plus`, `minus`, `eigenstate:i` (ascending eigenvalue
//! order of the observable), `basis:i`, `uniform`, `mixed:[p, ...]`,
//! `maximally-mixed`. Matrix and amplitude entries are numbers or
//! `[re, im]` pairs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix, DensityMatrix, HermitianOperator, StateVector};
use crate::smi::EnsembleKind;

pub const DEFAULT_N_TRAJECTORIES: usize = 10_000;
pub const DEFAULT_SLICES_PER_UNIT_TIME: usize = 200;
pub const DEFAULT_BASELINE_CAP: u64 = 1000;
pub const DEFAULT_PW_INSTANCES: usize = 100;
pub const DEFAULT_PW_OBSERVER_DIM: usize = 2;

const TOP_KEYS: &[&str] =
    &["kind", "master_seed", "n_trajectories", "state", "observable", "ensemble", "grid", "output", "baseline", "pw"];
const SECTIONS: &[(&str, &[&str])] = &[
    ("ensemble", &["kind", "lambda", "base", "total"]),
    ("grid", &["tau", "slices"]),
    ("output", &["path", "format"]),
    ("baseline", &["alpha_sq", "cap"]),
    ("pw", &["instances", "observer_dim"]),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DecayCurve,
    Stability,
    EnsembleAverage,
    BaselineEnvariance,
    PwConsistency,
    VerifySuite,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::DecayCurve,
        ExperimentKind::Stability,
        ExperimentKind::EnsembleAverage,
        ExperimentKind::BaselineEnvariance,
        ExperimentKind::PwConsistency,
        ExperimentKind::VerifySuite,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::DecayCurve => "decay-curve",
            ExperimentKind::Stability => "stability",
            ExperimentKind::EnsembleAverage => "ensemble-average",
            ExperimentKind::BaselineEnvariance => "baseline-envariance",
            ExperimentKind::PwConsistency => "pw-consistency",
            ExperimentKind::VerifySuite => "verify-suite",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.as_str()).collect();
            Error::config(format!("kind: unknown experiment kind {s:?} (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::config(format!("output.format: {other:?} is not one of json, csv"))),
        }
    }
}

/// An operator given by preset name or explicit rows of `[re, im]` entries.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Preset(String),
    Matrix(Vec<Vec<[f64; 2]>>),
}

/// A state given by preset name or explicit `[re, im]` amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum StateSpec {
    Preset(String),
    Amplitudes(Vec<[f64; 2]>),
}

/// A resolved initial state.
#[derive(Clone, Debug)]
pub enum InitialState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl InitialState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            InitialState::Pure(psi) => DensityMatrix::from_pure(psi),
            InitialState::Mixed(rho) => rho.clone(),
        }
    }

    pub fn pure(&self) -> Option<&StateVector> {
        match self {
            InitialState::Pure(psi) => Some(psi),
            InitialState::Mixed(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub kind: EnsembleKind,
    pub lambda: Vec<f64>,
    pub base: Option<OperatorSpec>,
    pub total: Option<OperatorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub tau: Vec<f64>,
    /// Slices per unit of `tau`; a run at `tau` uses `max(1, round(tau·slices))`.
    pub slices: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineConfig {
    pub alpha_sq: Option<Vec<f64>>,
    pub cap: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PwConfig {
    pub instances: usize,
    pub observer_dim: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

/// A fully validated experiment description. Serializes (without the output
/// section) to the canonical form that is hashed into the config digest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub n_trajectories: usize,
    pub state: StateSpec,
    pub observable: OperatorSpec,
    pub ensemble: EnsembleConfig,
    pub grid: GridConfig,
    pub baseline: BaselineConfig,
    pub pw: PwConfig,
    #[serde(skip)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Defaults for `kind` with everything else unset.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            master_seed: 0,
            n_trajectories: DEFAULT_N_TRAJECTORIES,
            state: StateSpec::Preset("plus".into()),
            observable: OperatorSpec::Preset("sigma_z".into()),
            ensemble: EnsembleConfig {
                kind: EnsembleKind::Dephasing,
                lambda: vec![1.0],
                base: None,
                total: None,
            },
            grid: GridConfig { tau: vec![1.0], slices: DEFAULT_SLICES_PER_UNIT_TIME },
            baseline: BaselineConfig { alpha_sq: None, cap: DEFAULT_BASELINE_CAP },
            pw: PwConfig { instances: DEFAULT_PW_INSTANCES, observer_dim: DEFAULT_PW_OBSERVER_DIM },
            output: OutputConfig::default(),
        }
    }

    /// Checks every numeric constraint and that all presets resolve.
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories < 2 {
            return Err(constraint("n_trajectories", self.n_trajectories, "n_trajectories >= 2"));
        }
        if self.grid.slices < 1 {
            return Err(constraint("grid.slices", self.grid.slices, "slices >= 1"));
        }
        if self.ensemble.lambda.is_empty() {
            return Err(Error::config("ensemble.lambda: empty list"));
        }
        if self.grid.tau.is_empty() {
            return Err(Error::config("grid.tau: empty list"));
        }
        for &l in &self.ensemble.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(constraint("ensemble.lambda", l, "lambda >= 0"));
            }
            if self.ensemble.kind == EnsembleKind::ZeroNoise && l != 0.0 {
                return Err(constraint("ensemble.lambda", l, "lambda = 0 for the zero-noise ensemble"));
            }
        }
        for &t in &self.grid.tau {
            if !(t.is_finite() && t > 0.0) {
                return Err(constraint("grid.tau", t, "tau > 0"));
            }
        }
        if self.baseline.cap < 1 {
            return Err(constraint("baseline.cap", self.baseline.cap, "cap >= 1"));
        }
        if self.pw.instances < 1 {
            return Err(constraint("pw.instances", self.pw.instances, "instances >= 1"));
        }
        if self.pw.observer_dim < 1 {
            return Err(constraint("pw.observer_dim", self.pw.observer_dim, "observer_dim >= 1"));
        }
        if self.kind == ExperimentKind::BaselineEnvariance && self.baseline.alpha_sq.is_none() {
            return Err(Error::config("baseline.alpha_sq: required for baseline-envariance"));
        }
        let a = self.observable_operator()?;
        self.initial_state(&a)?;
        self.base_hamiltonian(a.dim())?;
        self.total_hamiltonian(a.dim())?;
        Ok(())
    }

    pub fn observable_operator(&self) -> Result<HermitianOperator> {
        resolve_operator(&self.observable, None).map_err(|e| e.context("observable"))
    }

    pub fn initial_state(&self, observable: &HermitianOperator) -> Result<InitialState> {
        resolve_state(&self.state, observable).map_err(|e| e.context("state"))
    }

    pub fn base_hamiltonian(&self, dim: usize) -> Result<HermitianOperator> {
        let h = match &self.ensemble.base {
            None => HermitianOperator::zeros(dim),
            Some(spec) => resolve_operator(spec, Some(dim)).map_err(|e| e.context("ensemble.base"))?,
        };
        expect_dim(h, dim, "ensemble.base")
    }

    pub fn total_hamiltonian(&self, dim: usize) -> Result<Option<HermitianOperator>> {
        match &self.ensemble.total {
            None => Ok(None),
            Some(spec) => {
                let h = resolve_operator(spec, Some(dim)).map_err(|e| e.context("ensemble.total"))?;
                expect_dim(h, dim, "ensemble.total").map(Some)
            }
        }
    }

    /// Whether any sweepable axis holds more than one value.
    pub fn is_sweep(&self) -> bool {
        self.ensemble.lambda.len() > 1 || self.grid.tau.len() > 1
    }
}

fn expect_dim(h: HermitianOperator, dim: usize, key: &str) -> Result<HermitianOperator> {
    if h.dim() != dim {
        return Err(Error::dim(format!("{key}: dimension {} does not match the observable ({dim})", h.dim())));
    }
    Ok(h)
}

fn constraint(key: &str, value: impl fmt::Display, rule: &str) -> Error {
    Error::config(format!("{key}: value {value} violates {rule}"))
}

/// Parses and validates a TOML experiment document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: Table = toml::from_str(text).map_err(|e| Error::config(format!("malformed config: {e}")))?;
    check_unknown_keys(&table)?;

    let kind: ExperimentKind = match table.get("kind") {
        Some(v) => as_str(v, "kind")?.parse()?,
        None => return Err(Error::config("kind: missing required key")),
    };
    let mut cfg = ExperimentConfig::new(kind);

    if let Some(v) = table.get("master_seed") {
        cfg.master_seed = as_u64(v, "master_seed")?;
    }
    if let Some(v) = table.get("n_trajectories") {
        cfg.n_trajectories = as_usize(v, "n_trajectories")?;
    }
    if let Some(v) = table.get("state") {
        cfg.state = parse_state_spec(v, "state")?;
    }
    if let Some(v) = table.get("observable") {
        cfg.observable = parse_operator_spec(v, "observable")?;
    }

    let mut lambda_given = false;
    if let Some(sec) = section(&table, "ensemble")? {
        if let Some(v) = sec.get("kind") {
            cfg.ensemble.kind = as_str(v, "ensemble.kind")?.parse().map_err(|e: Error| e.context("ensemble.kind"))?;
        }
        if let Some(v) = sec.get("lambda") {
            cfg.ensemble.lambda = float_axis(v, "ensemble.lambda")?;
            lambda_given = true;
        }
        if let Some(v) = sec.get("base") {
            cfg.ensemble.base = Some(parse_operator_spec(v, "ensemble.base")?);
        }
        if let Some(v) = sec.get("total") {
            cfg.ensemble.total = Some(parse_operator_spec(v, "ensemble.total")?);
        }
    }
    if !lambda_given && cfg.ensemble.kind == EnsembleKind::ZeroNoise {
        cfg.ensemble.lambda = vec![0.0];
    }
    if let Some(sec) = section(&table, "grid")? {
        if let Some(v) = sec.get("tau") {
            cfg.grid.tau = float_axis(v, "grid.tau")?;
        }
        if let Some(v) = sec.get("slices") {
            cfg.grid.slices = as_usize(v, "grid.slices")?;
        }
    }
    if let Some(sec) = section(&table, "output")? {
        if let Some(v) = sec.get("path") {
            cfg.output.path = Some(PathBuf::from(as_str(v, "output.path")?));
        }
        if let Some(v) = sec.get("format") {
            cfg.output.format = as_str(v, "output.format")?.parse()?;
        }
    }
    if let Some(sec) = section(&table, "baseline")? {
        if let Some(v) = sec.get("alpha_sq") {
            cfg.baseline.alpha_sq = Some(float_list(v, "baseline.alpha_sq")?);
        }
        if let Some(v) = sec.get("cap") {
            cfg.baseline.cap = as_u64(v, "baseline.cap")?;
        }
    }
    if let Some(sec) = section(&table, "pw")? {
        if let Some(v) = sec.get("instances") {
            cfg.pw.instances = as_usize(v, "pw.instances")?;
        }
        if let Some(v) = sec.get("observer_dim") {
            cfg.pw.observer_dim = as_usize(v, "pw.observer_dim")?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check_unknown_keys(table: &Table) -> Result<()> {
    let mut unknown = Vec::new();
    collect_unknown(table, "", TOP_KEYS, &mut unknown);
    for (name, keys) in SECTIONS {
        if let Some(Value::Table(t)) = table.get(*name) {
            collect_unknown(t, name, keys, &mut unknown);
        }
    }
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::config(format!("unknown keys: {}", unknown.join("; "))))
    }
}

fn collect_unknown(table: &Table, prefix: &str, known: &[&str], out: &mut Vec<String>) {
    for key in table.keys() {
        if known.contains(&key.as_str()) {
            continue;
        }
        let full = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        let nearest = known
            .iter()
            .map(|k| (strsim::levenshtein(key, k), *k))
            .filter(|(d, _)| *d <= 2)
            .min();
        out.push(match nearest {
            Some((_, k)) => format!("{full:?} (did you mean {k:?}?)"),
            None => format!("{full:?}"),
        });
    }
}

fn section<'a>(table: &'a Table, name: &str) -> Result<Option<&'a Table>> {
    match table.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(Error::config(format!("{name}: expected a [{name}] table"))),
    }
}

fn as_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::config(format!("{key}: expected a string")))
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(format!("{key}: expected a number"))),
    }
}

/// Non-negative integer; strings are accepted for seeds beyond `i64::MAX`.
fn as_u64(v: &Value, key: &str) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(i) => Err(constraint(key, i, &format!("{key} >= 0"))),
        Value::String(s) => s.parse().map_err(|_| Error::config(format!("{key}: {s:?} is not a 64-bit unsigned integer"))),
        _ => Err(Error::config(format!("{key}: expected a non-negative integer"))),
    }
}

fn as_usize(v: &Value, key: &str) -> Result<usize> {
    let x = as_u64(v, key)?;
    usize::try_from(x).map_err(|_| Error::config(format!("{key}: {x} is too large")))
}

fn float_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_f64(x, key)).collect(),
        _ => Err(Error::config(format!("{key}: expected a list of numbers"))),
    }
}

/// A scalar or a non-empty list.
fn float_axis(v: &Value, key: &str) -> Result<Vec<f64>> {
    let xs = match v {
        Value::Array(_) => float_list(v, key)?,
        _ => vec![as_f64(v, key)?],
    };
    if xs.is_empty() {
        return Err(Error::config(format!("{key}: empty list")));
    }
    Ok(xs)
}

fn complex_entry(v: &Value, key: &str) -> Result<[f64; 2]> {
    match v {
        Value::Array(pair) if pair.len() == 2 => Ok([as_f64(&pair[0], key)?, as_f64(&pair[1], key)?]),
        Value::Array(_) => Err(Error::config(format!("{key}: complex entries are [re, im] pairs"))),
        other => Ok([as_f64(other, key)?, 0.0]),
    }
}

fn parse_operator_spec(v: &Value, key: &str) -> Result<OperatorSpec> {
    match v {
        Value::String(s) => Ok(OperatorSpec::Preset(s.clone())),
        Value::Array(rows) => {
            let parsed = rows
                .iter()
                .map(|row| match row {
                    Value::Array(entries) => entries.iter().map(|e| complex_entry(e, key)).collect(),
                    _ => Err(Error::config(format!("{key}: expected matrix rows"))),
                })
                .collect::<Result<Vec<Vec<[f64; 2]>>>>()?;
            Ok(OperatorSpec::Matrix(parsed))
        }
        _ => Err(Error::config(format!("{key}: expected a preset name or matrix rows"))),
    }
}

fn parse_state_spec(v: &Value, key: &str) -> Result<StateSpec> {
    match v {
        Value::String(s) => Ok(StateSpec::Preset(s.clone())),
        Value::Array(items) => {
            Ok(StateSpec::Amplitudes(items.iter().map(|e| complex_entry(e, key)).collect::<Result<_>>()?))
        }
        _ => Err(Error::config(format!("{key}: expected a preset name or amplitudes"))),
    }
}

fn to_complex(e: &[f64; 2]) -> Complex64 {
    Complex64::new(e[0], e[1])
}

fn bracket_list(body: &str, name: &str) -> Result<Vec<f64>> {
    serde_json::from_str::<Vec<f64>>(body.trim())
        .map_err(|_| Error::config(format!("preset {name:?}: expected a bracketed number list")))
}

fn preset_arg<T: FromStr>(arg: &str, name: &str) -> Result<T> {
    arg.trim().parse().map_err(|_| Error::config(format!("preset {name:?}: bad argument {arg:?}")))
}

/// Resolves an operator spec; `dim` sizes the dimension-free presets
/// (`zero`, `identity`), defaulting to 2.
pub fn resolve_operator(spec: &OperatorSpec, dim: Option<usize>) -> Result<HermitianOperator> {
    match spec {
        OperatorSpec::Matrix(rows) => {
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) {
                return Err(Error::dim("explicit matrix must be square and non-empty"));
            }
            let data = rows.iter().flat_map(|r| r.iter().map(to_complex)).collect();
            HermitianOperator::new(ComplexMatrix::from_row_major(n, n, data)?)
        }
        OperatorSpec::Preset(name) => {
            let (head, arg) = match name.split_once(':') {
                Some((h, a)) => (h, Some(a)),
                None => (name.as_str(), None),
            };
            let default_dim = dim.unwrap_or(2);
            match (head, arg) {
                ("sigma_x", None) => Ok(HermitianOperator::sigma_x()),
                ("sigma_y", None) => Ok(HermitianOperator::sigma_y()),
                ("sigma_z", None) => Ok(HermitianOperator::sigma_z()),
                ("zero", None) => Ok(HermitianOperator::zeros(default_dim)),
                ("identity", None) => Ok(HermitianOperator::identity(default_dim)),
                ("zero" | "identity", Some(a)) => {
                    let d: usize = preset_arg(a, name)?;
                    if d == 0 {
                        return Err(Error::dim(format!("preset {name:?}: dimension must be >= 1")));
                    }
                    Ok(if head == "zero" { HermitianOperator::zeros(d) } else { HermitianOperator::identity(d) })
                }
                ("diag", Some(a)) => {
                    let d = bracket_list(a, name)?;
                    if d.is_empty() || d.iter().any(|x| !x.is_finite()) {
                        return Err(Error::config(format!("preset {name:?}: entries must be finite and non-empty")));
                    }
                    Ok(HermitianOperator::from_real_diagonal(&d))
                }
                ("ising", Some(a)) => {
                    let j: f64 = preset_arg(a, name)?;
                    Ok(HermitianOperator::from_real_diagonal(&[j, -j, -j, j]))
                }
                _ => Err(Error::config(format!(
                    "unknown operator preset {name:?} (expected sigma_x, sigma_y, sigma_z, zero[:d], identity[:d], diag:[..], ising:J)"
                ))),
            }
        }
    }
}

/// Resolves a state spec against the observable (which fixes the dimension
/// and the eigenbasis for `eigenstate:i`).
pub fn resolve_state(spec: &StateSpec, observable: &HermitianOperator) -> Result<InitialState> {
    let dim = observable.dim();
    let state = match spec {
        StateSpec::Amplitudes(a) => InitialState::Pure(StateVector::new(a.iter().map(to_complex).collect())?),
        StateSpec::Preset(name) => {
            let (head, arg) = match name.split_once(':') {
                Some((h, a)) => (h, Some(a)),
                None => (name.as_str(), None),
            };
            match (head, arg) {
                ("plus" | "minus", None) => {
                    if dim != 2 {
                        return Err(Error::dim(format!("preset {name:?} is two-dimensional, observable has dim {dim}")));
                    }
                    let s = if head == "plus" { 1.0 } else { -1.0 };
                    InitialState::Pure(StateVector::normalized(vec![
                        Complex64::new(1.0, 0.0),
                        Complex64::new(s, 0.0),
                    ])?)
                }
                ("uniform", None) => InitialState::Pure(StateVector::uniform(dim)?),
                ("basis", Some(a)) => InitialState::Pure(StateVector::basis(dim, preset_arg(a, name)?)?),
                ("eigenstate", Some(a)) => {
                    let i: usize = preset_arg(a, name)?;
                    if i >= dim {
                        return Err(Error::dim(format!("preset {name:?}: index {i} out of range for dim {dim}")));
                    }
                    let (_, v) = eigh(observable)?;
                    InitialState::Pure(StateVector::normalized((0..dim).map(|r| v[(r, i)]).collect())?)
                }
                ("mixed", Some(a)) => {
                    let probs = bracket_list(a, name)?;
                    if probs.is_empty() {
                        return Err(Error::config(format!("preset {name:?}: empty probability list")));
                    }
                    InitialState::Mixed(DensityMatrix::from_probabilities(&probs)?)
                }
                ("maximally-mixed", None) => InitialState::Mixed(DensityMatrix::maximally_mixed(dim)),
                _ => {
                    return Err(Error::config(format!(
                        "unknown state preset {name:?} (expected plus, minus, uniform, basis:i, eigenstate:i, mixed:[..], maximally-mixed)"
                    )))
                }
            }
        }
    };
    let d = match &state {
        InitialState::Pure(p) => p.dim(),
        InitialState::Mixed(r) => r.dim(),
    };
    if d != dim {
        return Err(Error::dim(format!("state has dimension {d}, observable {dim}")));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_decay_config_uses_defaults() {
        let cfg = parse_config("kind = \"decay-curve\"\n[ensemble]\nlambda = 1.0\n").unwrap();
        assert_eq!(cfg.grid.slices, 200);
        assert_eq!(cfg.n_trajectories, 10_000);
        assert_eq!(cfg.ensemble.kind, EnsembleKind::Dephasing);
        assert_eq!(cfg.state, StateSpec::Preset("plus".into()));
        assert_eq!(cfg.output.format, OutputFormat::Json);
    }

    #[test]
    fn negative_lambda_names_the_constraint() {
        let err = parse_config("kind = \"stability\"\n[ensemble]\nlambda = -1\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("lambda >= 0") && msg.contains("ensemble.lambda"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_listed_with_suggestions() {
        let err = parse_config("kind = \"stability\"\nseeed = 3\n[ensemble]\nlamda = 1.0\n").unwrap_err().to_string();
        assert!(err.contains("\"ensemble.lamda\" (did you mean \"lambda\"?)"), "{err}");
        assert!(err.contains("\"seeed\""), "{err}");
    }

    #[test]
    fn other_constraints() {
        assert!(parse_config("kind = \"stability\"\nn_trajectories = 1\n").unwrap_err().to_string().contains(">= 2"));
        assert!(parse_config("kind = \"stability\"\n[grid]\ntau = 0\n").unwrap_err().to_string().contains("tau > 0"));
        assert!(parse_config("kind = \"stability\"\n[grid]\nslices = 0\n").is_err());
        assert!(parse_config("kind = \"nope\"\n").is_err());
        assert!(parse_config("master_seed = 1\n").is_err());
        assert!(parse_config("kind = \"baseline-envariance\"\n").is_err());
        assert!(parse_config("kind = \"stability\"\n[ensemble]\nkind = \"zero-noise\"\nlambda = 0.5\n").is_err());
        assert!(parse_config("kind = \"stability\"\nobservable = \"diag:[1,2,3]\"\n").is_err());
        assert!(parse_config("kind = = 1").is_err());
    }

    #[test]
    fn presets_and_explicit_values() {
        let cfg = parse_config(
            r#"
            kind = "stability"
            master_seed = "18446744073709551615"
            state = "eigenstate:2"
            observable = "diag:[3, 1, 2]"
            [ensemble]
            lambda = [0.1, 0.2]
            base = [[0.5, 0, 0], [0, 0.5, 0], [0, 0, [0.25, 0]]]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.master_seed, u64::MAX);
        assert!(cfg.is_sweep());
        let a = cfg.observable_operator().unwrap();
        let psi = cfg.initial_state(&a).unwrap();
        // Largest eigenvalue 3 sits at basis index 0.
        assert_eq!(psi.pure().unwrap().amplitudes()[0].norm(), 1.0);
        assert_eq!(cfg.base_hamiltonian(3).unwrap().matrix()[(2, 2)].re, 0.25);

        let ising = resolve_operator(&OperatorSpec::Preset("ising:0.5".into()), None).unwrap();
        assert_eq!(ising.matrix()[(1, 1)].re, -0.5);
        let amps = StateSpec::Amplitudes(vec![[0.6, 0.0], [0.0, 0.8]]);
        assert!(resolve_state(&amps, &HermitianOperator::sigma_z()).is_ok());
        let mixed = resolve_state(&StateSpec::Preset("mixed:[0.25, 0.75]".into()), &HermitianOperator::sigma_z()).unwrap();
        assert!(mixed.pure().is_none());
        assert!(resolve_operator(&OperatorSpec::Preset("sigma_w".into()), None).is_err());
        assert!(resolve_operator(&OperatorSpec::Matrix(vec![vec![[0.0, 0.0], [1.0, 0.0]], vec![[0.0, 0.0], [0.0, 0.0]]]), None)
            .is_err());
    }
}
