use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::stepper::TraceRecord;

pub const TRACE_HEADER: &str = "iter,loss,grad_norm,alpha,step_norm,constraint,lambda_used,wall_ms";

pub fn trace_file_name(kind: MetricKind) -> String {
    format!("trace_{}.csv", kind.method())
}

/// Formats like C's `printf("%.17g", v)`.
pub fn format_g17(v: f64) -> String {
    const PRECISION: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let cols = [
            r.loss,
            r.grad_norm,
            r.alpha,
            r.step_norm,
            r.constraint,
            r.lambda_used,
            r.wall_ms,
        ];
        out.push_str(&r.iteration.to_string());
        for c in cols {
            out.push(',');
            out.push_str(&format_g17(c));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let malformed = |reason: String| Error::MalformedTrace {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == TRACE_HEADER => {}
        Some(h) => return Err(malformed(format!("unexpected header `{h}`"))),
        None => return Err(malformed("file is empty".into())),
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed(format!("line {}: expected 8 fields, got {}", n + 2, fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| malformed(format!("line {}: field {}: {e}", n + 2, i + 1)))
        };
        let iteration: usize = fields[0]
            .trim()
            .parse()
            .map_err(|e| malformed(format!("line {}: iteration: {e}", n + 2)))?;
        if iteration != records.len() {
            return Err(malformed(format!(
                "line {}: iteration {iteration} breaks the contiguous index",
                n + 2
            )));
        }
        records.push(TraceRecord {
            iteration,
            loss: num(1)?,
            grad_norm: num(2)?,
            alpha: num(3)?,
            step_norm: num(4)?,
            constraint: num(5)?,
            lambda_used: num(6)?,
            wall_ms: num(7)?,
        });
    }
    if records.is_empty() {
        return Err(malformed("no records".into()));
    }
    Ok(records)
}
