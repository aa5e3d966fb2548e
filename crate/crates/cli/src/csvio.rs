//! CSV serialization of sweep results.
//!
//! The format is deliberately rigid so runs can be diffed byte for byte:
//!
//! - fixed header, fixed column order, `\n` line endings;
//! - floats rendered in scientific notation with nine significant digits,
//!   which round-trips every value the engine produces;
//! - absent values (analytic-only runs, failed points, metrics without a
//!   saturation limit) as genuinely empty fields, never sentinel zeros.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;
use crate::sweep::ResultRow;

/// Column header of every results file.
pub const CSV_HEADER: &str =
    "sweep_value,metric,mc_estimate,mc_stderr,analytic_bound,analytic_limit,sample_count,wall_time_s";

/// Render one float with nine significant digits, e.g. `2.50000000e-1`.
fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn fmt_opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Serialize rows to a complete CSV document (header included).
pub fn emit_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let count = row
            .sample_count
            .map(|c| c.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(row.sweep_value),
            row.metric,
            fmt_opt_float(row.mc_estimate),
            fmt_opt_float(row.mc_stderr),
            fmt_opt_float(row.analytic_bound),
            fmt_opt_float(row.analytic_limit),
            count,
            fmt_float(row.wall_time_s),
        );
    }
    out
}

/// Write rows to `path`, creating or truncating the file.
pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<(), CliError> {
    std::fs::write(path, emit_csv(rows))
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// Parse a document produced by [`emit_csv`] back into rows.
///
/// Exists so tests can assert lossless round-trips; it rejects anything the
/// emitter would not have written.
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(CliError::io(format!(
                "unexpected CSV header: {:?}",
                other.unwrap_or("<empty>")
            )))
        }
    }
    let field = |s: &str, line: usize, what: &str| -> Result<f64, CliError> {
        s.parse::<f64>()
            .map_err(|_| CliError::io(format!("line {line}: bad {what} field {s:?}")))
    };
    let opt_field = |s: &str, line: usize, what: &str| -> Result<Option<f64>, CliError> {
        if s.is_empty() {
            Ok(None)
        } else {
            field(s, line, what).map(Some)
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 8 {
            return Err(CliError::io(format!(
                "line {n}: expected 8 fields, got {}",
                parts.len()
            )));
        }
        let sample_count = if parts[6].is_empty() {
            None
        } else {
            Some(parts[6].parse::<u64>().map_err(|_| {
                CliError::io(format!("line {n}: bad sample_count field {:?}", parts[6]))
            })?)
        };
        rows.push(ResultRow {
            sweep_value: field(parts[0], n, "sweep_value")?,
            metric: parts[1].to_string(),
            mc_estimate: opt_field(parts[2], n, "mc_estimate")?,
            mc_stderr: opt_field(parts[3], n, "mc_stderr")?,
            analytic_bound: opt_field(parts[4], n, "analytic_bound")?,
            analytic_limit: opt_field(parts[5], n, "analytic_limit")?,
            sample_count,
            wall_time_s: field(parts[7], n, "wall_time_s")?,
        });
    }
    Ok(rows)
}

// ======================================================================
// Tests
// ======================================================================
