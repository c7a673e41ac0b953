use std::fmt::Write as _;

use crate::error::Result;
use crate::linalg::{cosine, norm, SymMatrix};
use crate::metrics::{DampedMetric, MetricKind};
use crate::stepper::{solve_step, StepPolicy};

/// Vanilla and metric-constrained steps for the same gradient and ε.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGeometry {
    pub epsilon: f64,
    pub vanilla: [f64; 2],
    pub metric: [f64; 2],
    pub angle_degrees: f64,
}

impl StepGeometry {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,dx,dy,norm\n");
        for (name, v) in [("vanilla", self.vanilla), ("metric", self.metric)] {
            let _ = writeln!(out, "{name},{},{},{}", v[0], v[1], norm(&v));
        }
        let _ = writeln!(out, "# angle_degrees={}", self.angle_degrees);
        out
    }

    pub fn to_text(&self) -> String {
        format!(
            "epsilon       {}\nvanilla step  ({:.6}, {:.6})  |step| = {:.6}\nmetric step   ({:.6}, {:.6})  |step| = {:.6}\nangle         {:.3} deg\n",
            self.epsilon,
            self.vanilla[0],
            self.vanilla[1],
            norm(&self.vanilla),
            self.metric[0],
            self.metric[1],
            norm(&self.metric),
            self.angle_degrees
        )
    }
}

/// Trust-region steps under `M = I` and under the given 2×2 metric.
pub fn demo_step_geometry(g: [f64; 2], m: [[f64; 2]; 2], epsilon: f64) -> Result<StepGeometry> {
    let policy = StepPolicy::TrustRegion { epsilon };
    let metric = SymMatrix::from_rows(&[m[0].to_vec(), m[1].to_vec()])?;
    let plain = solve_step(
        &g,
        &DampedMetric::new(MetricKind::Identity, SymMatrix::identity(2), 0.0),
        &policy,
        None,
    )?;
    let shaped = solve_step(&g, &DampedMetric::new(MetricKind::Hessian, metric, 0.0), &policy, None)?;
    let cos = cosine(&plain.delta, &shaped.delta).clamp(-1.0, 1.0);
    // `+ 0.0` turns −0 into 0 for printing.
    Ok(StepGeometry {
        epsilon,
        vanilla: [plain.delta[0] + 0.0, plain.delta[1] + 0.0],
        metric: [shaped.delta[0] + 0.0, shaped.delta[1] + 0.0],
        angle_degrees: cos.acos().to_degrees(),
    })
}
