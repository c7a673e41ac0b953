use rand::RngCore;

use super::{Head, Model};
use crate::error::{check_dim, Result};
use crate::linalg::{Matrix, SymMatrix};

/// A model seen through the linear change of variables `θ' = A θ`.
///
/// `h'_{θ'}(x) = h_{A⁻¹θ'}(x)`, so `J' = J A⁻¹` and second derivatives pick
/// up `A⁻ᵀ (·) A⁻¹`.
#[derive(Debug, Clone)]
pub struct Reparametrized<M> {
    inner: M,
    forward: Matrix,
    inverse: Matrix,
}

impl<M: Model> Reparametrized<M> {
    pub fn new(inner: M, forward: Matrix) -> Result<Self> {
        check_dim(inner.param_dim(), forward.rows())?;
        let inverse = forward.inverse()?;
        Ok(Self {
            inner,
            forward,
            inverse,
        })
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn forward(&self) -> &Matrix {
        &self.forward
    }

    /// Maps new coordinates back to the inner model's θ.
    pub fn to_inner(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.inverse.matvec(theta)
    }

    pub fn from_inner(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.forward.matvec(theta)
    }
}

impl<M: Model> Model for Reparametrized<M> {
    fn id(&self) -> String {
        format!("reparam({})", self.inner.id())
    }

    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn rep_dim(&self) -> usize {
        self.inner.rep_dim()
    }

    fn head(&self) -> &Head {
        self.inner.head()
    }

    fn representation(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.inner.representation(&self.to_inner(theta)?, x)
    }

    fn rep_jacobian(&self, theta: &[f64], x: &[f64]) -> Result<Matrix> {
        self.inner
            .rep_jacobian(&self.to_inner(theta)?, x)?
            .matmul(&self.inverse)
    }

    fn rep_curvature(&self, theta: &[f64], x: &[f64], weights: &[f64]) -> Result<Option<SymMatrix>> {
        let Some(c) = self.inner.rep_curvature(&self.to_inner(theta)?, x, weights)? else {
            return Ok(None);
        };
        let pulled = self
            .inverse
            .transpose()
            .matmul(&c.to_matrix())?
            .matmul(&self.inverse)?;
        Ok(Some(SymMatrix::symmetrize(&pulled)?))
    }

    fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let theta = self.inner.init_params(rng);
        self.forward
            .matvec(&theta)
            .expect("forward map is square with the inner parameter dimension")
    }
}
