//! Per-epoch metric tables as comma-separated text.

use std::fs;
use std::path::Path;

use crate::error::{Result, RnaError};

pub const METRICS_HEADER: &str = "epoch,objective,grad_norm,objective_rna,grad_norm_rna,lambda_used";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub epoch: i64,
    pub objective: f64,
    pub grad_norm: f64,
    pub objective_rna: f64,
    pub grad_norm_rna: f64,
    /// `NaN` when the epoch fell back to the last iterate.
    pub lambda_used: f64,
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_scalar(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_metrics(rows: &[MetricRow]) -> String {
    let mut out = String::with_capacity(METRICS_HEADER.len() + 1 + rows.len() * 128);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.epoch.to_string());
        for v in [r.objective, r.grad_norm, r.objective_rna, r.grad_norm_rna, r.lambda_used] {
            out.push(',');
            out.push_str(&format_scalar(v));
        }
        out.push('\n');
    }
    out
}

pub fn write_metrics(path: impl AsRef<Path>, rows: &[MetricRow]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_metrics(rows)).map_err(|e| RnaError::io(path, e))
}

pub fn parse_metrics(path: &Path, text: &str) -> Result<Vec<MetricRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        _ => return Err(RnaError::format(path, "missing or unexpected metrics header")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = |what: &str| RnaError::format(path, format!("line {}: {what}", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            Ok(MetricRow {
                epoch: fields[0].parse().map_err(|_| bad("bad epoch"))?,
                objective: num(fields[1])?,
                grad_norm: num(fields[2])?,
                objective_rna: num(fields[3])?,
                grad_norm_rna: num(fields[4])?,
                lambda_used: num(fields[5])?,
            })
        })
        .collect()
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| RnaError::io(path, e))?;
    parse_metrics(path, &text)
}
