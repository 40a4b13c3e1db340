//! Per-level error reports, rates and CSV/JSON output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::OutputFormat;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "level,n_elements,n_dofs,lambda,err_lambda,err_a,err_l2,rate_lambda,rate_a,rate_l2,work_units,wall_seconds,varpi_max,gamma_obs";

/// One level of a study. `level` counts from 1 (`V_{h_1}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub level: usize,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub lambda: f64,
    pub err_lambda: Option<f64>,
    pub err_a: Option<f64>,
    pub err_l2: Option<f64>,
    pub rate_lambda: Option<f64>,
    pub rate_a: Option<f64>,
    pub rate_l2: Option<f64>,
    pub work_units: u64,
    pub wall_seconds: f64,
    pub varpi_max: Option<usize>,
    pub gamma_obs: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ReportRow>,
}

/// `rate(k) = ln(e_{k−1} / e_k) / ln β`; undefined for the first level and
/// wherever an error is missing, zero or negative.
pub fn compute_rates(errors: &[Option<f64>], beta: usize) -> Vec<Option<f64>> {
    let lb = (beta as f64).ln();
    let valid = |e: Option<f64>| e.filter(|v| *v > 0.0 && v.is_finite());
    (0..errors.len())
        .map(|k| {
            if k == 0 {
                return None;
            }
            let (a, b) = (valid(errors[k - 1])?, valid(errors[k])?);
            Some((a / b).ln() / lb)
        })
        .collect()
}

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn fmt_f(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.11e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

impl ErrorReport {
    /// Fill the rate columns from the error columns.
    pub fn fill_rates(&mut self, beta: usize) {
        let col = |f: fn(&ReportRow) -> Option<f64>| self.rows.iter().map(f).collect::<Vec<_>>();
        let rl = compute_rates(&col(|r| r.err_lambda), beta);
        let ra = compute_rates(&col(|r| r.err_a), beta);
        let rb = compute_rates(&col(|r| r.err_l2), beta);
        for (k, row) in self.rows.iter_mut().enumerate() {
            row.rate_lambda = rl[k];
            row.rate_a = ra[k];
            row.rate_l2 = rb[k];
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.level,
                r.n_elements,
                r.n_dofs,
                fmt_f(r.lambda),
                fmt_opt(r.err_lambda),
                fmt_opt(r.err_a),
                fmt_opt(r.err_l2),
                fmt_opt(r.rate_lambda),
                fmt_opt(r.rate_a),
                fmt_opt(r.rate_l2),
                r.work_units,
                fmt_f(r.wall_seconds),
                r.varpi_max.map(|v| v.to_string()).unwrap_or_default(),
                fmt_opt(r.gamma_obs),
            );
        }
        out
    }

    /// JSON with every float rounded to 12 significant digits.
    pub fn to_json(&self) -> String {
        let r = |x: f64| round12(x);
        let o = |x: Option<f64>| x.map(round12);
        let rounded = ErrorReport {
            rows: self
                .rows
                .iter()
                .map(|row| ReportRow {
                    lambda: r(row.lambda),
                    err_lambda: o(row.err_lambda),
                    err_a: o(row.err_a),
                    err_l2: o(row.err_l2),
                    rate_lambda: o(row.rate_lambda),
                    rate_a: o(row.rate_a),
                    rate_l2: o(row.rate_l2),
                    wall_seconds: r(row.wall_seconds),
                    gamma_obs: o(row.gamma_obs),
                    ..row.clone()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&rounded).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            field: "<report>".into(),
            message: e.to_string(),
        })
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// Write the report to `path`.
pub fn emit_report(report: &ErrorReport, format: OutputFormat, path: &Path) -> Result<()> {
    std::fs::write(path, report.render(format)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
