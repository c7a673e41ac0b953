use crate::error::{check_dim, Error, Result};
use crate::linalg::SymMatrix;

/// Fixed-variance Gaussian output distribution `N(h, β²I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFixedVarHead {
    beta: f64,
}

impl GaussianFixedVarHead {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta.is_finite() {
            Ok(Self { beta })
        } else {
            Err(Error::InvalidArgument(format!(
                "Gaussian standard deviation must be positive, got {beta}"
            )))
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Atomic loss `l(y, h)` attached to a representation `h`.
///
/// * `SquaredError`: `½‖y − h‖²`, no density attached; this is the form
///   with a residual `Δ = y − h`.
/// * `Gaussian`: negative log-likelihood of `N(h, β²I)` including the
///   normalizing constant `(m/2)·ln(2πβ²)`.
/// * `Softmax`: cross-entropy of `softmax(h)` against a one-hot `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Head {
    SquaredError,
    Gaussian(GaussianFixedVarHead),
    Softmax,
}

fn softmax(h: &[f64]) -> Vec<f64> {
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = h.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp(h: &[f64]) -> f64 {
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + h.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl Head {
    pub fn name(&self) -> &'static str {
        match self {
            Head::SquaredError => "squared_error",
            Head::Gaussian(_) => "gaussian",
            Head::Softmax => "softmax",
        }
    }

    /// Whether `log p(y|h)` is available.
    pub fn has_density(&self) -> bool {
        !matches!(self, Head::SquaredError)
    }

    /// Whether the atomic loss is exactly `−log p(y|h)`.
    pub fn is_nll(&self) -> bool {
        self.has_density()
    }

    /// Whether the atomic loss is `½‖Δ‖²` with `Δ = y − h`.
    pub fn has_residual(&self) -> bool {
        matches!(self, Head::SquaredError)
    }

    pub fn gaussian(&self) -> Option<GaussianFixedVarHead> {
        match self {
            Head::Gaussian(g) => Some(*g),
            _ => None,
        }
    }

    pub fn loss(&self, y: &[f64], h: &[f64]) -> Result<f64> {
        check_dim(h.len(), y.len())?;
        Ok(match self {
            Head::SquaredError => 0.5 * sq_dist(y, h),
            Head::Gaussian(g) => {
                let b2 = g.beta * g.beta;
                let m = h.len() as f64;
                sq_dist(y, h) / (2.0 * b2)
                    + 0.5 * m * (2.0 * std::f64::consts::PI * b2).ln()
            }
            Head::Softmax => {
                let mass: f64 = y.iter().sum();
                mass * log_sum_exp(h) - y.iter().zip(h).map(|(a, b)| a * b).sum::<f64>()
            }
        })
    }

    /// `∂l/∂h`
    pub fn grad_h(&self, y: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        check_dim(h.len(), y.len())?;
        Ok(match self {
            Head::SquaredError => h.iter().zip(y).map(|(a, b)| a - b).collect(),
            Head::Gaussian(g) => {
                let b2 = g.beta * g.beta;
                h.iter().zip(y).map(|(a, b)| (a - b) / b2).collect()
            }
            Head::Softmax => {
                let mass: f64 = y.iter().sum();
                softmax(h)
                    .into_iter()
                    .zip(y)
                    .map(|(p, t)| mass * p - t)
                    .collect()
            }
        })
    }

    /// `∂²l/∂h²`
    pub fn hess_h(&self, y: &[f64], h: &[f64]) -> Result<SymMatrix> {
        check_dim(h.len(), y.len())?;
        let m = h.len();
        Ok(match self {
            Head::SquaredError => SymMatrix::identity(m),
            Head::Gaussian(g) => SymMatrix::diagonal(&vec![1.0 / (g.beta * g.beta); m]),
            Head::Softmax => {
                let mass: f64 = y.iter().sum();
                let p = softmax(h);
                SymMatrix::from_upper_fn(m, |i, j| {
                    let d = if i == j { p[i] } else { 0.0 };
                    mass * (d - p[i] * p[j])
                })
            }
        })
    }

    /// `∂ log p(y|h) / ∂h`
    pub fn log_density_grad_h(&self, y: &[f64], h: &[f64]) -> Option<Result<Vec<f64>>> {
        if !self.has_density() {
            return None;
        }
        Some(
            self.grad_h(y, h)
                .map(|g| g.into_iter().map(|v| -v).collect()),
        )
    }

    pub fn log_density(&self, y: &[f64], h: &[f64]) -> Option<Result<f64>> {
        if !self.has_density() {
            return None;
        }
        Some(self.loss(y, h).map(|l| -l))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
