//! Central finite-difference oracles.
//!
//! These are deliberately naive: they only call the function being checked
//! and never reuse any analytic derivative code, so they can validate the
//! models' Jacobians and the Hessian metric independently.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    /// Probe step.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            rtol: 1e-5,
            atol: 1e-8,
        }
    }
}

impl FdConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    fn checked_step(&self) -> Result<f64> {
        if self.step > 0.0 && self.step.is_finite() {
            Ok(self.step)
        } else {
            Err(Error::InvalidArgument(format!(
                "finite-difference step must be positive, got {}",
                self.step
            )))
        }
    }
}

fn finite(v: f64, coordinate: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteEvaluation { coordinate })
    }
}

fn shifted(theta: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut t = theta.to_vec();
    for &(i, dx) in moves {
        t[i] += dx;
    }
    t
}

/// `(f(θ+heᵢ) − f(θ−heᵢ)) / 2h` for every coordinate.
pub fn fd_gradient<F>(f: F, theta: &[f64], cfg: &FdConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let h = cfg.checked_step()?;
    (0..theta.len())
        .map(|i| {
            let plus = finite(f(&shifted(theta, &[(i, h)])), i)?;
            let minus = finite(f(&shifted(theta, &[(i, -h)])), i)?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

/// Column-wise central differences of a vector function.
pub fn fd_jacobian<F>(f: F, theta: &[f64], cfg: &FdConfig) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let h = cfg.checked_step()?;
    let rows = f(theta).len();
    let mut jac = Matrix::zeros(rows, theta.len());
    for j in 0..theta.len() {
        let plus = f(&shifted(theta, &[(j, h)]));
        let minus = f(&shifted(theta, &[(j, -h)]));
        if plus.len() != rows || minus.len() != rows {
            return Err(Error::ShapeMismatch {
                left: rows,
                right: plus.len().max(minus.len()),
            });
        }
        for i in 0..rows {
            let d = finite(plus[i], j)? - finite(minus[i], j)?;
            jac.set(i, j, d / (2.0 * h));
        }
    }
    Ok(jac)
}

/// Second-order central stencil. Off-diagonals use the four-point formula
/// `(f(++) − f(+−) − f(−+) + f(−−)) / 4h²`; the output is symmetrized.
pub fn fd_hessian<F>(f: F, theta: &[f64], cfg: &FdConfig) -> Result<SymMatrix>
where
    F: Fn(&[f64]) -> f64,
{
    let h = cfg.checked_step()?;
    let d = theta.len();
    let f0 = finite(f(theta), 0)?;
    let mut raw = Matrix::zeros(d, d);
    for i in 0..d {
        let plus = finite(f(&shifted(theta, &[(i, h)])), i)?;
        let minus = finite(f(&shifted(theta, &[(i, -h)])), i)?;
        raw.set(i, i, (plus - 2.0 * f0 + minus) / (h * h));
        for j in (i + 1)..d {
            let pp = finite(f(&shifted(theta, &[(i, h), (j, h)])), j)?;
            let pm = finite(f(&shifted(theta, &[(i, h), (j, -h)])), j)?;
            let mp = finite(f(&shifted(theta, &[(i, -h), (j, h)])), j)?;
            let mm = finite(f(&shifted(theta, &[(i, -h), (j, -h)])), j)?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            raw.set(i, j, v);
            raw.set(j, i, v);
        }
    }
    SymMatrix::symmetrize(&raw)
}

/// Outcome of an elementwise closeness check.
#[derive(Debug, Clone, PartialEq)]
pub struct CloseReport {
    pub close: bool,
    /// Index of the largest `|aᵢ − bᵢ|`.
    pub argmax: usize,
    pub max_abs_diff: f64,
    /// Largest `|aᵢ − bᵢ| / (atol + rtol·|bᵢ|)`; at most 1 when `close`.
    pub worst_ratio: f64,
}

impl std::fmt::Display for CloseReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "close={} max|a-b|={:.3e} at index {} (ratio to bound {:.3e})",
            self.close, self.max_abs_diff, self.argmax, self.worst_ratio
        )
    }
}

/// True iff `|aᵢ − bᵢ| ≤ atol + rtol·|bᵢ|` for every element.
pub fn assert_close(a: &[f64], b: &[f64], rtol: f64, atol: f64) -> Result<CloseReport> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut report = CloseReport {
        close: true,
        argmax: 0,
        max_abs_diff: 0.0,
        worst_ratio: 0.0,
    };
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        let diff = (x - y).abs();
        let bound = atol + rtol * y.abs();
        // NaN compares false, so it must fail explicitly.
        if diff.is_nan() || diff > bound {
            report.close = false;
        }
        if diff > report.max_abs_diff || diff.is_nan() {
            report.max_abs_diff = diff;
            report.argmax = i;
        }
        let ratio = if bound > 0.0 {
            diff / bound
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        report.worst_ratio = report.worst_ratio.max(ratio);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_examples() {
        let cfg = FdConfig::default();
        assert_eq!(fd_gradient(|_| 3.0, &[1.0, 2.0], &cfg).unwrap(), vec![0.0, 0.0]);

        let half_sq = |t: &[f64]| 0.5 * t.iter().map(|x| x * x).sum::<f64>();
        for h in [1e-5, 1e-2, 0.5] {
            let g = fd_gradient(half_sq, &[1.0, 2.0], &FdConfig::with_step(h)).unwrap();
            assert!((g[0] - 1.0).abs() < 1e-10 && (g[1] - 2.0).abs() < 1e-10, "{g:?}");
        }

        let g = fd_gradient(|t: &[f64]| t[0].sin(), &[0.0], &cfg).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_is_reported() {
        let r = fd_gradient(|t: &[f64]| t[0].ln(), &[0.0, 1.0], &FdConfig::default());
        assert!(matches!(r, Err(Error::NonFiniteEvaluation { coordinate: 0 })));
        let r = fd_hessian(|t: &[f64]| 1.0 / t[1], &[1.0, 0.0], &FdConfig::default());
        assert!(matches!(r, Err(Error::NonFiniteEvaluation { .. })));
        assert!(fd_gradient(|_| 0.0, &[0.0], &FdConfig::with_step(0.0)).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let cfg = FdConfig::default();
        let a = [[1.0, -2.0, 0.5], [3.0, 0.25, -1.0]];
        let lin = |t: &[f64]| {
            a.iter()
                .map(|r| r.iter().zip(t).map(|(x, y)| x * y).sum())
                .collect::<Vec<f64>>()
        };
        let j = fd_jacobian(lin, &[0.3, -0.7, 1.1], &cfg).unwrap();
        for i in 0..2 {
            for k in 0..3 {
                assert!((j.get(i, k) - a[i][k]).abs() < 1e-9);
            }
        }

        let j = fd_jacobian(|t: &[f64]| vec![t[0] * t[0], t[0] * t[1]], &[1.0, 1.0], &cfg).unwrap();
        let expect = [[2.0, 0.0], [1.0, 1.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j.get(i, k) - expect[i][k]).abs() < 1e-9);
            }
        }

        let j = fd_jacobian(|_| vec![1.0, 2.0], &[5.0, 6.0, 7.0], &cfg).unwrap();
        assert!(j.as_slice().iter().all(|&x| x == 0.0));
        assert_eq!((j.rows(), j.cols()), (2, 3));
    }

    #[test]
    fn hessian_examples() {
        let cfg = FdConfig::with_step(1e-4);
        let a = SymMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let quad = |t: &[f64]| 0.5 * crate::linalg::quadratic_form(&a, t).unwrap();
        let h = fd_hessian(quad, &[0.4, -1.3], &cfg).unwrap();
        let r = assert_close(h.as_slice(), a.as_slice(), 1e-6, 0.0).unwrap();
        assert!(r.close, "{r}");

        let h = fd_hessian(|_| 2.0, &[0.4, -1.3], &cfg).unwrap();
        assert!(h.as_slice().iter().all(|&x| x == 0.0));

        let h = fd_hessian(|t: &[f64]| t[0] * t[0] * t[1], &[1.0, 1.0], &cfg).unwrap();
        let expect = [2.0, 2.0, 2.0, 0.0];
        for (x, e) in h.as_slice().iter().zip(expect) {
            assert!((x - e).abs() < 1e-4, "{h:?}");
        }
        assert_eq!(h.get(0, 1).to_bits(), h.get(1, 0).to_bits());
    }

    #[test]
    fn halving_step_quarters_error() {
        let f = |t: &[f64]| (t[0].sin() * t[1]).exp();
        let theta = [0.7_f64, 0.4];
        let exact = {
            let e = (theta[0].sin() * theta[1]).exp();
            [e * theta[0].cos() * theta[1], e * theta[0].sin()]
        };
        let err = |h: f64| {
            let g = fd_gradient(f, &theta, &FdConfig::with_step(h)).unwrap();
            (g[0] - exact[0]).abs().max((g[1] - exact[1]).abs())
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn close_examples() {
        let x = [1.0, -2.0, 3.5];
        assert!(assert_close(&x, &x, 0.0, 0.0).unwrap().close);
        assert!(assert_close(&[1.0], &[1.0 + 5e-6], 1e-5, 0.0).unwrap().close);
        let r = assert_close(&[0.0, 1.0], &[0.0, 1.1], 1e-5, 0.0).unwrap();
        assert!(!r.close);
        assert_eq!(r.argmax, 1);
        assert!(!assert_close(&[f64::NAN], &[1.0], 1.0, 1.0).unwrap().close);
        assert!(matches!(
            assert_close(&[1.0], &[1.0, 2.0], 0.0, 0.0),
            Err(Error::ShapeMismatch { left: 1, right: 2 })
        ));
    }
}
