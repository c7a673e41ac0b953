//! The six metric matrices `M(θ)` that turn the constrained step into the
//! familiar methods, assembled as empirical means over a batch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{add_damping, SymMatrix};
use crate::models::{log_density_grad, sample_gradient, Model, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Vanilla gradient descent.
    Identity,
    /// `E[JᵀJ]`
    ClassicalGaussNewton,
    /// `E[∇log p ∇log pᵀ]` over the observed outputs (natural gradient).
    EmpiricalFisher,
    /// `E[∇l ∇lᵀ]`
    GradientCovariance,
    /// Hessian of the batch loss (Newton).
    Hessian,
    /// `E[Jᵀ H_y J]`
    GeneralizedGaussNewton,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Identity,
        MetricKind::ClassicalGaussNewton,
        MetricKind::EmpiricalFisher,
        MetricKind::GradientCovariance,
        MetricKind::Hessian,
        MetricKind::GeneralizedGaussNewton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Identity => "identity",
            MetricKind::ClassicalGaussNewton => "classical_gauss_newton",
            MetricKind::EmpiricalFisher => "empirical_fisher",
            MetricKind::GradientCovariance => "gradient_covariance",
            MetricKind::Hessian => "hessian",
            MetricKind::GeneralizedGaussNewton => "generalized_gauss_newton",
        }
    }

    /// Short name of the optimization method this metric induces.
    pub fn method(self) -> &'static str {
        match self {
            MetricKind::Identity => "vanilla",
            MetricKind::ClassicalGaussNewton => "cgn",
            MetricKind::EmpiricalFisher => "natural",
            MetricKind::GradientCovariance => "covariance",
            MetricKind::Hessian => "newton",
            MetricKind::GeneralizedGaussNewton => "ggn",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.method() == s)
            .or(match s.as_str() {
                "gd" | "gradient_descent" => Some(MetricKind::Identity),
                "fisher" | "natural_gradient" => Some(MetricKind::EmpiricalFisher),
                "gauss_newton" => Some(MetricKind::ClassicalGaussNewton),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown metric kind `{s}`")))
    }
}

/// How λ is chosen for a metric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Damping {
    /// `1e-6 · (1 + trace(base)/d)`
    #[default]
    Auto,
    Fixed(f64),
}

impl Damping {
    pub fn from_option(lambda: Option<f64>) -> Self {
        lambda.map_or(Damping::Auto, Damping::Fixed)
    }

    pub fn resolve(self, base: &SymMatrix) -> Result<f64> {
        match self {
            Damping::Auto => Ok(default_lambda(base)),
            Damping::Fixed(l) if l >= 0.0 && l.is_finite() => Ok(l),
            Damping::Fixed(l) => Err(Error::InvalidArgument(format!(
                "damping must be a finite non-negative number, got {l}"
            ))),
        }
    }
}

/// Scale-aware damping floor.
pub fn default_lambda(base: &SymMatrix) -> f64 {
    let d = base.dim().max(1) as f64;
    1e-6 * (1.0 + (base.trace() / d).abs())
}

/// An assembled metric with its damping: `effective = base + λI`.
#[derive(Debug, Clone)]
pub struct DampedMetric {
    kind: MetricKind,
    base: SymMatrix,
    lambda: f64,
    effective: SymMatrix,
}

impl DampedMetric {
    pub fn new(kind: MetricKind, base: SymMatrix, lambda: f64) -> Self {
        let effective = add_damping(&base, lambda);
        Self {
            kind,
            base,
            lambda,
            effective,
        }
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn base(&self) -> &SymMatrix {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn effective(&self) -> &SymMatrix {
        &self.effective
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Same base, different λ.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self::new(self.kind, self.base.clone(), lambda)
    }
}

fn check_batch(model: &dyn Model, theta: &[f64], batch: &[Sample]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    check_dim(model.param_dim(), theta.len())
}

/// `(1/N) Σ_s J_sᵀ H_s J_s`, optionally plus the curvature of `h` weighted
/// by `∂l/∂h` (which turns the generalized Gauss-Newton sum into the Hessian).
fn gauss_newton_sum(
    model: &dyn Model,
    theta: &[f64],
    batch: &[Sample],
    outer: Outer<'_>,
    with_curvature: bool,
) -> Result<SymMatrix> {
    let d = model.param_dim();
    let w = 1.0 / batch.len() as f64;
    let mut acc = SymMatrix::zeros(d);
    for s in batch {
        let jac = model.rep_jacobian(theta, &s.x)?;
        let weighted = match outer {
            Outer::Identity => None,
            Outer::Fixed(h) => Some(h.to_matrix().matmul(&jac)?),
            Outer::LossHessian => {
                let h = model.representation(theta, &s.x)?;
                Some(model.head().hess_h(&s.y, &h)?.to_matrix().matmul(&jac)?)
            }
        };
        acc.add_at_b(&jac, weighted.as_ref().unwrap_or(&jac), w);
        if with_curvature {
            let h = model.representation(theta, &s.x)?;
            let grad_h = model.head().grad_h(&s.y, &h)?;
            if let Some(c) = model.rep_curvature(theta, &s.x, &grad_h)? {
                acc.add_scaled(&c, w);
            }
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy)]
enum Outer<'a> {
    Identity,
    Fixed(&'a SymMatrix),
    LossHessian,
}

fn outer_product_mean<F>(d: usize, batch: &[Sample], per_sample: F) -> Result<SymMatrix>
where
    F: Fn(&Sample) -> Result<Vec<f64>>,
{
    let w = 1.0 / batch.len() as f64;
    let mut acc = SymMatrix::zeros(d);
    for s in batch {
        acc.add_outer(&per_sample(s)?, w);
    }
    Ok(acc)
}

/// Undamped `M(θ)` for `kind`.
pub fn assemble_base(
    kind: MetricKind,
    model: &dyn Model,
    batch: &[Sample],
    theta: &[f64],
) -> Result<SymMatrix> {
    check_batch(model, theta, batch)?;
    let d = model.param_dim();
    match kind {
        MetricKind::Identity => Ok(SymMatrix::identity(d)),
        MetricKind::ClassicalGaussNewton => {
            gauss_newton_sum(model, theta, batch, Outer::Identity, false)
        }
        MetricKind::EmpiricalFisher => {
            if !model.head().has_density() {
                return Err(Error::CapabilityMissing {
                    model: model.id(),
                    capability: "a log-density",
                });
            }
            outer_product_mean(d, batch, |s| log_density_grad(model, theta, s))
        }
        MetricKind::GradientCovariance => {
            outer_product_mean(d, batch, |s| sample_gradient(model, theta, s))
        }
        MetricKind::Hessian => gauss_newton_sum(model, theta, batch, Outer::LossHessian, true),
        MetricKind::GeneralizedGaussNewton => {
            gauss_newton_sum(model, theta, batch, Outer::LossHessian, false)
        }
    }
}

pub fn build_metric(
    kind: MetricKind,
    model: &dyn Model,
    batch: &[Sample],
    theta: &[f64],
    damping: Damping,
) -> Result<DampedMetric> {
    let base = assemble_base(kind, model, batch, theta)?;
    let lambda = damping.resolve(&base)?;
    Ok(DampedMetric::new(kind, base, lambda))
}

/// Fisher information of the fixed-variance Gaussian head, `E[JᵀJ]/β²`.
pub fn exact_fisher_gaussian(model: &dyn Model, batch: &[Sample], theta: &[f64]) -> Result<SymMatrix> {
    let gaussian = model.head().gaussian().ok_or_else(|| Error::CapabilityMissing {
        model: model.id(),
        capability: "a fixed-variance Gaussian head",
    })?;
    check_batch(model, theta, batch)?;
    let precision = SymMatrix::diagonal(&vec![
        1.0 / (gaussian.beta() * gaussian.beta());
        model.rep_dim()
    ]);
    gauss_newton_sum(model, theta, batch, Outer::Fixed(&precision), false)
}

/// `KL(N(μ₁, β²I) ‖ N(μ₂, β²I)) = ‖μ₂ − μ₁‖² / 2β²`
pub fn kl_gaussian_fixed_var(mu1: &[f64], mu2: &[f64], beta: f64) -> Result<f64> {
    check_dim(mu1.len(), mu2.len())?;
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidArgument(format!("β must be positive, got {beta}")));
    }
    let sq: f64 = mu1.iter().zip(mu2).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok(sq / (2.0 * beta * beta))
}

/// Largest absolute entry difference between two matrices.
pub fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
