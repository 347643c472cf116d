//! Per-run metrics and their CSV encoding.
//!
//! Column order is fixed and documented here; `wall_time_ms` comes last and
//! is the only column excluded when comparing runs for reproducibility.

use std::io::Write;

use fedfreq_core::Strategy;

/// One metrics record: an estimate's quality and cost at one error target.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub strategy: Strategy,
    pub rows: usize,
    pub width: usize,
    /// Targeted error; 0 when the run had no target.
    pub tau_target: f64,
    pub seed: u64,
    pub linf_error: f64,
    /// Count of items with error above 0.1 / width.
    pub items_over_threshold: usize,
    pub bits_per_client: u64,
    /// Gaussian noise scale; 0 without privacy.
    pub sigma: f64,
    /// Privacy term of the error bound; 0 without privacy.
    pub dp_term: f64,
    /// Full error bound for hybrid runs; 0 for the other strategies.
    pub bound: f64,
    pub wall_time_ms: f64,
}

pub const CSV_HEADER: &str = "strategy,rows,width,tau_target,seed,linf_error,\
items_over_threshold,bits_per_client,sigma,dp_term,bound,wall_time_ms";

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.strategy,
            self.rows,
            self.width,
            self.tau_target,
            self.seed,
            self.linf_error,
            self.items_over_threshold,
            self.bits_per_client,
            self.sigma,
            self.dp_term,
            self.bound,
            self.wall_time_ms,
        )
    }
}

/// Writes the header and one line per row.
pub fn write_csv<W: Write>(rows: &[MetricsRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}

/// Largest absolute per-item deviation.
pub fn linf(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Count of items whose deviation exceeds `threshold`.
pub fn items_over(estimate: &[f64], truth: &[f64], threshold: f64) -> usize {
    estimate
        .iter()
        .zip(truth)
        .filter(|(a, b)| (*a - *b).abs() > threshold)
        .count()
}
