use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::read_trace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub method: String,
    pub iterations: usize,
    pub final_loss: f64,
    /// First iteration whose loss is at or below the threshold.
    pub iterations_to_threshold: Option<usize>,
    pub mean_alpha: f64,
    pub mean_lambda: f64,
}

fn method_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    stem.strip_prefix("trace_").map(str::to_string).unwrap_or(stem)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Summarizes trace files, best final loss first.
///
/// Without an explicit `threshold`, the largest final loss among the traces
/// is used, so every method reaches it and the column ranks convergence speed.
pub fn compare(paths: &[PathBuf], threshold: Option<f64>) -> Result<Vec<TraceSummary>> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("compare needs at least one trace".into()));
    }
    let traces = paths
        .iter()
        .map(|p| Ok((method_name(p), read_trace(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let final_of = |records: &[crate::stepper::TraceRecord]| records.last().map_or(f64::NAN, |r| r.loss);
    let threshold = threshold.unwrap_or_else(|| {
        traces
            .iter()
            .map(|(_, r)| final_of(r))
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let mut rows: Vec<TraceSummary> = traces
        .into_iter()
        .map(|(method, records)| TraceSummary {
            iterations: records.len(),
            final_loss: final_of(&records),
            iterations_to_threshold: records
                .iter()
                .find(|r| r.loss <= threshold)
                .map(|r| r.iteration),
            mean_alpha: mean(records.iter().map(|r| r.alpha)),
            mean_lambda: mean(records.iter().map(|r| r.lambda_used)),
            method,
        })
        .collect();
    rows.sort_by(|a, b| a.final_loss.total_cmp(&b.final_loss));
    Ok(rows)
}

pub fn render_table(rows: &[TraceSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>6} {:>14} {:>10} {:>12} {:>12}",
        "method", "iters", "final_loss", "to_thresh", "mean_alpha", "mean_lambda"
    );
    for r in rows {
        let reach = r
            .iterations_to_threshold
            .map_or_else(|| "-".to_string(), |i| i.to_string());
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>14.6e} {:>10} {:>12.4e} {:>12.4e}",
            r.method, r.iterations, r.final_loss, reach, r.mean_alpha, r.mean_lambda
        );
    }
    out
}
