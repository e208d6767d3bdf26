//! Error-table CSV:
//!
//! ```text
//! resolution,rms_error,mc_std_error,samples
//! 4,0.105272188,0.00344612,200
//! ...
//! # fitted_slope=0.502386
//! ```
//!
//! Numbers are printed in shortest round-trip decimal form, padded to at
//! least six significant digits, so parsing a file gives back the report
//! values bit for bit.

use std::io::Write;
use std::path::Path;

use acsolve_core::{ErrorReport, ErrorRow};

use crate::CliError;

pub const HEADER: &str = "resolution,rms_error,mc_std_error,samples";
const SLOPE_KEY: &str = "# fitted_slope=";
const MIN_SIGNIFICANT: usize = 6;

/// Plain decimal (never exponent) with at least six significant digits.
pub fn format_decimal(v: f64) -> String {
    let mut s = format!("{v}");
    if !v.is_finite() {
        return s;
    }
    let significant = s
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count();
    let missing = if v == 0.0 { MIN_SIGNIFICANT - 1 } else { MIN_SIGNIFICANT.saturating_sub(significant) };
    if missing > 0 {
        if !s.contains('.') {
            s.push('.');
        }
        s.extend(std::iter::repeat('0').take(missing));
    }
    s
}

pub fn render(report: &ErrorReport) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.resolution,
            format_decimal(row.rms_error),
            format_decimal(row.mc_std_error),
            report.samples
        ));
    }
    let slope = report.fitted_slope().map_or_else(|| "NA".to_string(), format_decimal);
    out.push_str(SLOPE_KEY);
    out.push_str(&slope);
    out.push('\n');
    out
}

/// Writes the table to `path`.
pub fn emit_csv(report: &ErrorReport, path: &Path) -> Result<(), CliError> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(render(report).as_bytes()))
        .map_err(|e| CliError::io(path, e))
}

/// What a CSV file carries: the rows, the sample count and the slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub rows: Vec<ErrorRow>,
    pub samples: u64,
    pub fitted_slope: Option<f64>,
}

pub fn parse(text: &str) -> Result<ParsedTable, String> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err("missing header".into());
    }
    let mut rows = Vec::new();
    let mut samples = 0;
    let mut fitted_slope = None;
    for line in lines {
        if let Some(v) = line.strip_prefix(SLOPE_KEY) {
            fitted_slope = match v {
                "NA" => None,
                v => Some(v.parse().map_err(|e| format!("bad slope {v:?}: {e}"))?),
            };
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [res, rms, se, n] = fields[..] else {
            return Err(format!("expected 4 fields in {line:?}"));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"));
        rows.push(ErrorRow {
            resolution: res.parse().map_err(|e| format!("bad resolution {res:?}: {e}"))?,
            rms_error: num(rms)?,
            mc_std_error: num(se)?,
        });
        samples = n.parse().map_err(|e| format!("bad sample count {n:?}: {e}"))?;
    }
    Ok(ParsedTable {
        rows,
        samples,
        fitted_slope,
    })
}
