//! Probabilistic regression models: a representation `h_θ(x)`, its Jacobian,
//! and an atomic loss `l(y, h)` with derivatives in `h`.
//!
//! Per-sample quantities in θ are derived here by the chain rule, so every
//! [`Model`] only needs to supply forward values and first/second derivatives
//! of `h` in θ.

mod head;
mod network;
mod reparam;

pub use head::{GaussianFixedVarHead, Head};
pub use network::Network;
pub use reparam::Reparametrized;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{scale, Matrix, SymMatrix};

/// One input/output pair. Class labels are stored one-hot in `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y }
    }
}

pub trait Model: Send + Sync {
    fn id(&self) -> String;
    fn param_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Dimension of `h_θ(x)`; also the dimension of `y`.
    fn rep_dim(&self) -> usize;
    fn head(&self) -> &Head;

    fn representation(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>>;

    /// `J_x(θ)`, shape `rep_dim × param_dim`.
    fn rep_jacobian(&self, theta: &[f64], x: &[f64]) -> Result<Matrix>;

    /// `Σ_k w_k ∇²_θ h_k(θ, x)`, or `None` when `h` is linear in θ.
    fn rep_curvature(&self, theta: &[f64], x: &[f64], weights: &[f64]) -> Result<Option<SymMatrix>>;

    fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64>;
}

fn missing(model: &dyn Model, capability: &'static str) -> Error {
    Error::CapabilityMissing {
        model: model.id(),
        capability,
    }
}

fn check_sample(model: &dyn Model, theta: &[f64], s: &Sample) -> Result<()> {
    check_dim(model.param_dim(), theta.len())?;
    check_dim(model.input_dim(), s.x.len())?;
    check_dim(model.rep_dim(), s.y.len())
}

fn non_empty(batch: &[Sample]) -> Result<()> {
    if batch.is_empty() {
        Err(Error::EmptyBatch)
    } else {
        Ok(())
    }
}

pub fn representation(model: &dyn Model, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    model.representation(theta, x)
}

pub fn rep_jacobian(model: &dyn Model, theta: &[f64], x: &[f64]) -> Result<Matrix> {
    model.rep_jacobian(theta, x)
}

pub fn atomic_loss(model: &dyn Model, y: &[f64], h: &[f64]) -> Result<f64> {
    check_dim(model.rep_dim(), h.len())?;
    model.head().loss(y, h)
}

pub fn loss_grad_h(model: &dyn Model, y: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    check_dim(model.rep_dim(), h.len())?;
    model.head().grad_h(y, h)
}

pub fn loss_hess_h(model: &dyn Model, y: &[f64], h: &[f64]) -> Result<SymMatrix> {
    check_dim(model.rep_dim(), h.len())?;
    model.head().hess_h(y, h)
}

/// `l_θ(s)`
pub fn sample_loss(model: &dyn Model, theta: &[f64], s: &Sample) -> Result<f64> {
    check_sample(model, theta, s)?;
    let h = model.representation(theta, &s.x)?;
    model.head().loss(&s.y, &h)
}

/// `∇_θ l_θ(s) = J_xᵀ ∂l/∂h`
pub fn sample_gradient(model: &dyn Model, theta: &[f64], s: &Sample) -> Result<Vec<f64>> {
    check_sample(model, theta, s)?;
    let h = model.representation(theta, &s.x)?;
    let jac = model.rep_jacobian(theta, &s.x)?;
    jac.tr_matvec(&model.head().grad_h(&s.y, &h)?)
}

/// `∇_θ log p_θ(y|x)`; for NLL losses this is `−∇_θ l_θ(s)` bit for bit.
pub fn log_density_grad(model: &dyn Model, theta: &[f64], s: &Sample) -> Result<Vec<f64>> {
    check_sample(model, theta, s)?;
    let h = model.representation(theta, &s.x)?;
    let outer = model
        .head()
        .log_density_grad_h(&s.y, &h)
        .ok_or_else(|| missing(model, "a log-density"))??;
    model.rep_jacobian(theta, &s.x)?.tr_matvec(&outer)
}

/// `L̂_B(θ)`: mean atomic loss, accumulated in batch order.
pub fn batch_loss(model: &dyn Model, theta: &[f64], batch: &[Sample]) -> Result<f64> {
    non_empty(batch)?;
    let mut total = 0.0;
    for s in batch {
        total += sample_loss(model, theta, s)?;
    }
    Ok(total / batch.len() as f64)
}

pub fn batch_gradient(model: &dyn Model, theta: &[f64], batch: &[Sample]) -> Result<Vec<f64>> {
    non_empty(batch)?;
    let mut total = vec![0.0; model.param_dim()];
    for s in batch {
        for (t, g) in total.iter_mut().zip(sample_gradient(model, theta, s)?) {
            *t += g;
        }
    }
    Ok(scale(&total, 1.0 / batch.len() as f64))
}

/// `Δ_θ(s) = y − h_θ(x)` for squared-error models.
pub fn residual(model: &dyn Model, theta: &[f64], s: &Sample) -> Result<Vec<f64>> {
    if !model.head().has_residual() {
        return Err(missing(model, "a squared-error residual"));
    }
    check_sample(model, theta, s)?;
    let h = model.representation(theta, &s.x)?;
    Ok(s.y.iter().zip(&h).map(|(y, h)| y - h).collect())
}

/// Jacobian of `θ ↦ Δ_θ(s)`, i.e. `−J_x(θ)`.
pub fn residual_jacobian(model: &dyn Model, theta: &[f64], s: &Sample) -> Result<Matrix> {
    if !model.head().has_residual() {
        return Err(missing(model, "a squared-error residual"));
    }
    check_sample(model, theta, s)?;
    let jac = model.rep_jacobian(theta, &s.x)?;
    Matrix::from_row_major(jac.rows(), jac.cols(), scale(jac.as_slice(), -1.0))
}
