//! Report serialization.
//!
//! JSON reports carry `config_digest`, `version`, `kind`,
//! `wall_clock_seconds`, `payload` and `errors` at the top level; a sweep is
//! written as an array of such objects. Floating-point numbers are printed
//! with 17 significant digits so they parse back bit-identical.
//!
//! CSV output is available for decay curves: header
//! `tau,measured,analytic,mc_error`, one row per tau (rows of all sweep
//! points are concatenated), `analytic` empty where no closed form exists.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::config::{ExperimentKind, OutputFormat};
use super::run::RunResult;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "tau,measured,analytic,mc_error";

/// Compact JSON with `{:.16e}` floats.
struct PreciseFormatter;

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_precise_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter);
    value.serialize(&mut ser).map_err(|e| Error::Numerical(format!("cannot serialize report: {e}")))?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_json(results: &[RunResult]) -> Result<String> {
    let mut s = match results {
        [single] => to_precise_json(single)?,
        many => to_precise_json(many)?,
    };
    s.push('\n');
    Ok(s)
}

#[derive(Deserialize)]
struct CurveColumns {
    taus: Vec<f64>,
    measured_offdiagonals: Vec<f64>,
    analytic_offdiagonals: Option<Vec<f64>>,
    monte_carlo_errors: Vec<f64>,
}

pub fn render_csv(results: &[RunResult]) -> Result<String> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        if r.kind != ExperimentKind::DecayCurve {
            return Err(Error::config(format!("output.format: csv is only available for decay-curve, not {}", r.kind)));
        }
        let c: CurveColumns = serde_json::from_value(r.payload["curve"].clone())
            .map_err(|e| Error::Numerical(format!("malformed decay-curve payload: {e}")))?;
        for (k, tau) in c.taus.iter().enumerate() {
            let analytic = c.analytic_offdiagonals.as_ref().map_or(String::new(), |a| f17(a[k]));
            writeln!(
                out,
                "{},{},{},{}",
                f17(*tau),
                f17(c.measured_offdiagonals[k]),
                analytic,
                f17(c.monte_carlo_errors[k])
            )
            .expect("writing to a String");
        }
    }
    Ok(out)
}

pub fn render(results: &[RunResult], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => render_json(results),
        OutputFormat::Csv => render_csv(results),
    }
}

/// Writes the rendered report to `path`, creating parent directories.
pub fn emit_report(results: &[RunResult], path: &Path, format: OutputFormat) -> Result<()> {
    let text = render(results, format)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
