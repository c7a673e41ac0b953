//! Dense linear algebra for the metric matrices.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`. [`Matrix`] is a general row-major
//! matrix (Jacobians, reparametrization maps) and [`SymMatrix`] is a square
//! matrix whose symmetry is exact by construction. Positive-definite systems
//! are solved through [`SpdFactor`], a plain Cholesky factor. A failed
//! factorization is reported, never patched with jitter: the damping policy
//! lives in the stepper.

use crate::error::{check_dim, Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Cosine of the angle between two vectors; 0 when either is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

/// General dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, v.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `selfᵀ · v`
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Matrix> {
        check_dim(self.rows, self.cols)?;
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a.get(r, col).abs().total_cmp(&a.get(s, col).abs()))
                .expect("non-empty range");
            let p = a.get(pivot, col);
            if p == 0.0 || !p.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "matrix is singular (column {col})"
                )));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            for j in 0..n {
                a.data[col * n + j] /= p;
                inv.data[col * n + j] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.data[r * n + j] -= f * a.data[col * n + j];
                    inv.data[r * n + j] -= f * inv.data[col * n + j];
                }
            }
        }
        Ok(inv)
    }
}

/// Square matrix with `m[i][j] == m[j][i]` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds from the upper triangle of `f(i, j)` (`i <= j`), mirroring it.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Symmetrizes a square matrix as `(A + Aᵀ)/2`.
    pub fn symmetrize(a: &Matrix) -> Result<Self> {
        check_dim(a.rows(), a.cols())?;
        Ok(Self::from_upper_fn(a.rows(), |i, j| {
            if i == j {
                a.get(i, i)
            } else {
                0.5 * (a.get(i, j) + a.get(j, i))
            }
        }))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::symmetrize(&Matrix::from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, v.len())?;
        Ok((0..self.dim).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: scale(&self.data, s),
        }
    }

    /// Adds `w · v vᵀ` in place, touching the upper triangle and mirroring.
    pub fn add_outer(&mut self, v: &[f64], w: f64) {
        let n = self.dim;
        debug_assert_eq!(v.len(), n);
        for i in 0..n {
            let vi = w * v[i];
            if vi == 0.0 {
                continue;
            }
            for j in i..n {
                self.data[i * n + j] += vi * v[j];
            }
        }
        self.mirror_upper();
    }

    /// Adds `w · Aᵀ B` where the product is known to be symmetric
    /// (`B = H A` with `H` symmetric). Only the upper triangle is accumulated.
    pub(crate) fn add_at_b(&mut self, a: &Matrix, b: &Matrix, w: f64) {
        let n = self.dim;
        debug_assert_eq!(a.cols(), n);
        debug_assert_eq!(b.cols(), n);
        debug_assert_eq!(a.rows(), b.rows());
        for k in 0..a.rows() {
            let ar = a.row(k);
            let br = b.row(k);
            for i in 0..n {
                let ai = w * ar[i];
                if ai == 0.0 {
                    continue;
                }
                for j in i..n {
                    self.data[i * n + j] += ai * br[j];
                }
            }
        }
        self.mirror_upper();
    }

    /// Adds another symmetric matrix scaled by `w`.
    pub fn add_scaled(&mut self, other: &SymMatrix, w: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += w * b;
        }
    }

    fn mirror_upper(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                self.data[j * n + i] = self.data[i * n + j];
            }
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    dim: usize,
    lower: Vec<f64>,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.lower[i * self.dim + j]
        }
    }

    /// Rebuilds `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_upper_fn(n, |i, j| {
            (0..=i).map(|k| self.lower(i, k) * self.lower(j, k)).sum()
        })
    }
}

pub fn cholesky_spd(m: &SymMatrix) -> Result<SpdFactor> {
    let n = m.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d.is_nan() || d <= 0.0 || d.is_infinite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(SpdFactor { dim: n, lower: l })
}

pub fn spd_solve(factor: &SpdFactor, b: &[f64]) -> Result<Vec<f64>> {
    let n = factor.dim;
    check_dim(n, b.len())?;
    let l = &factor.lower;
    // L z = b
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    // Lᵀ x = z
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    Ok(z)
}

/// `vᵀ M v`
pub fn quadratic_form(m: &SymMatrix, v: &[f64]) -> Result<f64> {
    Ok(dot(v, &m.matvec(v)?))
}

/// Returns `M + λI`; `M` is left untouched.
pub fn add_damping(m: &SymMatrix, lambda: f64) -> SymMatrix {
    debug_assert!(lambda >= 0.0);
    let mut out = m.clone();
    let n = out.dim;
    for i in 0..n {
        out.data[i * n + i] += lambda;
    }
    out
}

/// Minimizes `f(δ) = c + gᵀδ + ½ δᵀ M δ` for positive-definite `M`.
///
/// Returns the minimizer `δ* = −M⁻¹g` and the minimum value `c − ½ gᵀM⁻¹g`.
pub fn min_quadratic(c: f64, g: &[f64], m: &SymMatrix) -> Result<(Vec<f64>, f64)> {
    check_dim(m.dim(), g.len())?;
    let factor = cholesky_spd(m)?;
    let x = spd_solve(&factor, g)?;
    let value = c - 0.5 * dot(g, &x);
    Ok((scale(&x, -1.0), value))
}
