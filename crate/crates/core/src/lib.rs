//! Gradient descent under a quadratic step constraint.
//!
//! Each update solves `min gᵀδθ` subject to `δθᵀ M(θ) δθ ≤ ε²`, whose solution
//! is `δθ = −α M⁻¹ g`. Picking `M` recovers vanilla gradient descent,
//! classical Gauss-Newton, natural gradient (empirical Fisher), the gradient
//! covariance method, Newton's method and generalized Gauss-Newton; see
//! [`metrics::MetricKind`].
//!
//! [`harness`] holds the experiment plumbing used by the `bench-cli` binary.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod numcheck;
pub mod stepper;

pub use error::{Error, Result};
pub use linalg::{Matrix, SpdFactor, SymMatrix};
pub use metrics::{build_metric, Damping, DampedMetric, MetricKind};
pub use models::{GaussianFixedVarHead, Head, Model, Network, Reparametrized, Sample};
pub use stepper::{
    run_descent, solve_step, DescentOutcome, DescentSettings, StepPolicy, StepResult, Trace,
    TraceHeader, TraceRecord,
};
