use rand::{Rng, RngCore};

use super::{Head, Model};
use crate::error::{check_dim, Result};
use crate::linalg::{Matrix, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layers {
    /// `h = W x (+ b)`
    Linear { bias: bool },
    /// `h = W₂ tanh(W₁ x + b₁) + b₂`
    Tanh { hidden: usize },
}

/// Small dense network with analytic first and second derivatives.
///
/// Parameter layout is row-major weights followed by biases, layer by layer:
/// `[W | b]` for the linear model and `[W₁ | b₁ | W₂ | b₂]` for the tanh MLP.
#[derive(Debug, Clone)]
pub struct Network {
    input_dim: usize,
    output_dim: usize,
    layers: Layers,
    head: Head,
}

impl Network {
    pub fn linear(input_dim: usize, output_dim: usize, head: Head) -> Self {
        Self {
            input_dim,
            output_dim,
            layers: Layers::Linear { bias: true },
            head,
        }
    }

    /// Linear model without the bias vector, `h = W x`.
    pub fn linear_no_bias(input_dim: usize, output_dim: usize, head: Head) -> Self {
        Self {
            input_dim,
            output_dim,
            layers: Layers::Linear { bias: false },
            head,
        }
    }

    pub fn mlp(input_dim: usize, hidden: usize, output_dim: usize, head: Head) -> Self {
        Self {
            input_dim,
            output_dim,
            layers: Layers::Tanh { hidden },
            head,
        }
    }

    pub fn hidden_width(&self) -> Option<usize> {
        match self.layers {
            Layers::Tanh { hidden } => Some(hidden),
            Layers::Linear { .. } => None,
        }
    }

    fn check(&self, theta: &[f64], x: &[f64]) -> Result<()> {
        check_dim(self.param_dim(), theta.len())?;
        check_dim(self.input_dim, x.len())
    }

    /// Hidden activations `tanh(W₁x + b₁)`.
    fn hidden_layer(&self, hidden: usize, theta: &[f64], x: &[f64]) -> Vec<f64> {
        let n = self.input_dim;
        let b1 = hidden * n;
        (0..hidden)
            .map(|j| {
                let row = &theta[j * n..(j + 1) * n];
                let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + theta[b1 + j];
                a.tanh()
            })
            .collect()
    }
}

impl Model for Network {
    fn id(&self) -> String {
        match self.layers {
            Layers::Linear { .. } => format!("linear_{}", self.head.name()),
            Layers::Tanh { hidden } => format!("mlp{hidden}_{}", self.head.name()),
        }
    }

    fn param_dim(&self) -> usize {
        let (n, m) = (self.input_dim, self.output_dim);
        match self.layers {
            Layers::Linear { bias } => m * n + if bias { m } else { 0 },
            Layers::Tanh { hidden } => hidden * (n + 1) + m * (hidden + 1),
        }
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn rep_dim(&self) -> usize {
        self.output_dim
    }

    fn head(&self) -> &Head {
        &self.head
    }

    fn representation(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check(theta, x)?;
        let (n, m) = (self.input_dim, self.output_dim);
        Ok(match self.layers {
            Layers::Linear { bias } => (0..m)
                .map(|k| {
                    let row = &theta[k * n..(k + 1) * n];
                    let b = if bias { theta[m * n + k] } else { 0.0 };
                    row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b
                })
                .collect(),
            Layers::Tanh { hidden } => {
                let t = self.hidden_layer(hidden, theta, x);
                let w2 = hidden * (n + 1);
                let b2 = w2 + m * hidden;
                (0..m)
                    .map(|k| {
                        let row = &theta[w2 + k * hidden..w2 + (k + 1) * hidden];
                        row.iter().zip(&t).map(|(w, v)| w * v).sum::<f64>() + theta[b2 + k]
                    })
                    .collect()
            }
        })
    }

    fn rep_jacobian(&self, theta: &[f64], x: &[f64]) -> Result<Matrix> {
        self.check(theta, x)?;
        let (n, m, d) = (self.input_dim, self.output_dim, self.param_dim());
        let mut jac = Matrix::zeros(m, d);
        match self.layers {
            Layers::Linear { bias } => {
                for k in 0..m {
                    let row = jac.row_mut(k);
                    row[k * n..(k + 1) * n].copy_from_slice(x);
                    if bias {
                        row[m * n + k] = 1.0;
                    }
                }
            }
            Layers::Tanh { hidden } => {
                let t = self.hidden_layer(hidden, theta, x);
                let b1 = hidden * n;
                let w2 = hidden * (n + 1);
                let b2 = w2 + m * hidden;
                for k in 0..m {
                    let row = jac.row_mut(k);
                    for j in 0..hidden {
                        let back = theta[w2 + k * hidden + j] * (1.0 - t[j] * t[j]);
                        for (i, xi) in x.iter().enumerate() {
                            row[j * n + i] = back * xi;
                        }
                        row[b1 + j] = back;
                        row[w2 + k * hidden + j] = t[j];
                    }
                    row[b2 + k] = 1.0;
                }
            }
        }
        Ok(jac)
    }

    fn rep_curvature(&self, theta: &[f64], x: &[f64], weights: &[f64]) -> Result<Option<SymMatrix>> {
        self.check(theta, x)?;
        check_dim(self.output_dim, weights.len())?;
        let hidden = match self.layers {
            Layers::Linear { .. } => return Ok(None),
            Layers::Tanh { hidden } => hidden,
        };
        let (n, m, d) = (self.input_dim, self.output_dim, self.param_dim());
        let t = self.hidden_layer(hidden, theta, x);
        let b1 = hidden * n;
        let w2 = hidden * (n + 1);
        // First-layer parameters of unit j see the augmented input (x, 1).
        let first_layer = |j: usize| {
            (0..n)
                .map(move |i| (j * n + i, x[i]))
                .chain(std::iter::once((b1 + j, 1.0)))
        };
        let mut c = Matrix::zeros(d, d);
        for j in 0..hidden {
            let s = 1.0 - t[j] * t[j];
            let u: f64 = (0..m).map(|k| weights[k] * theta[w2 + k * hidden + j]).sum();
            let second = -2.0 * t[j] * s * u;
            for (p, xp) in first_layer(j) {
                for (q, xq) in first_layer(j) {
                    c.set(p, q, second * xp * xq);
                }
                for (k, wk) in weights.iter().enumerate() {
                    let r = w2 + k * hidden + j;
                    let v = wk * s * xp;
                    c.set(p, r, v);
                    c.set(r, p, v);
                }
            }
        }
        Ok(Some(SymMatrix::symmetrize(&c)?))
    }

    fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let d = self.param_dim();
        match self.layers {
            Layers::Linear { .. } => vec![0.0; d],
            Layers::Tanh { hidden } => {
                let n = self.input_dim;
                let first = hidden * (n + 1);
                let r1 = 1.0 / (n as f64).sqrt();
                let r2 = 1.0 / (hidden as f64).sqrt();
                (0..d)
                    .map(|p| {
                        let r = if p < first { r1 } else { r2 };
                        rng.random_range(-r..r)
                    })
                    .collect()
            }
        }
    }
}
