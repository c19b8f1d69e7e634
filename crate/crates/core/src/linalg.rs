//! Small dense linear algebra for symmetric problems.
//!
//! Everything here is sized for spectral dimensions in the tens: a row-major
//! [`Matrix`], a Cholesky-validated [`SymmetricPd`] wrapper, and a cyclic
//! Jacobi eigensolver used for symmetric square roots.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Stacks vectors as the columns of a matrix.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · selfᵀ`, symmetric by construction.
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let half = T::of(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    /// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`. Only the lower
    /// triangle of `self` is read.
    pub fn cholesky(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("cholesky of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(l)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

/// `a − b`, elementwise.
pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `a + s·b`, elementwise.
pub fn add_scaled<T: Real>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn scaled<T: Real>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// Solves `L x = b` for lower-triangular `L`.
fn forward_substitute<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.nrows();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s = s - l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
fn backward_substitute<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.nrows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s = s - l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Symmetric positive-definite matrix, validated by a successful Cholesky
/// factorization which is kept for solves and determinants.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPd<T> {
    matrix: Matrix<T>,
    chol: Matrix<T>,
}

impl<T: Real> SymmetricPd<T> {
    /// Relative asymmetry accepted without complaint; the stored matrix is
    /// the symmetrized input.
    pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} is not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let tol = T::of(Self::SYMMETRY_TOLERANCE).max(T::epsilon() * T::of(8.0));
        if matrix.asymmetry() > tol {
            return Err(Error::Domain("matrix is not symmetric".into()));
        }
        let matrix = matrix.symmetrized();
        let chol = matrix.cholesky()?;
        Ok(Self { matrix, chol })
    }

    pub fn identity(p: usize) -> Self {
        let m = Matrix::identity(p);
        Self {
            chol: m.clone(),
            matrix: m,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }

    /// Lower Cholesky factor.
    pub fn cholesky_factor(&self) -> &Matrix<T> {
        &self.chol
    }

    pub fn logdet(&self) -> T {
        let two = T::of(2.0);
        self.chol.diagonal().into_iter().map(|d| two * d.ln()).sum()
    }

    /// `S⁻¹ b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        backward_substitute(&self.chol, &forward_substitute(&self.chol, b))
    }

    /// `xᵀ S⁻¹ x`, computed as `‖L⁻¹x‖²`.
    pub fn inv_quad_form(&self, x: &[T]) -> T {
        norm_sq(&forward_substitute(&self.chol, x))
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            inv.set_column(j, &self.solve(&e));
            e[j] = T::zero();
        }
        inv.symmetrized()
    }

    pub fn eigen(&self) -> SymmetricEigen<T> {
        SymmetricEigen::new(&self.matrix)
    }

    /// Symmetric positive-definite square root `S^{1/2}`.
    pub fn sqrt(&self) -> Result<Matrix<T>> {
        self.eigen().map_spectrum(|l| l.sqrt())
    }

    /// Symmetric inverse square root `S^{-1/2}`.
    pub fn inv_sqrt(&self) -> Result<Matrix<T>> {
        self.eigen().map_spectrum(|l| T::one() / l.sqrt())
    }
}

/// Eigendecomposition `A = V diag(λ) Vᵀ` of a symmetric matrix by cyclic
/// Jacobi rotations. Eigenvalues are sorted in ascending order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Matrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    const MAX_SWEEPS: usize = 64;

    pub fn new(a: &Matrix<T>) -> Self {
        let n = a.nrows();
        let mut a = a.symmetrized();
        let mut v = Matrix::identity(n);
        let eps = T::epsilon();
        for _ in 0..Self::MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    // Skipping only negligible elements relative to their
                    // diagonal keeps small eigenvalues accurate.
                    if apq.abs() <= eps * (app * aqq).abs().sqrt() || apq == T::zero() {
                        if apq != T::zero() {
                            a[(p, q)] = T::zero();
                            a[(q, p)] = T::zero();
                        }
                        continue;
                    }
                    rotated = true;
                    let theta = (aqq - app) / (T::of(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    a[(p, p)] = app - t * apq;
                    a[(q, q)] = aqq + t * apq;
                    a[(p, q)] = T::zero();
                    a[(q, p)] = T::zero();
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
        let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    /// `V diag(f(λ)) Vᵀ`; fails if any eigenvalue is not strictly positive.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> Result<Matrix<T>> {
        if self.eigenvalues.iter().any(|&l| !(l > T::zero())) {
            return Err(Error::NotPositiveDefinite);
        }
        let n = self.eigenvalues.len();
        let fl: Vec<T> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let v = &self.eigenvectors;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = T::zero();
                for k in 0..n {
                    s = s + v[(i, k)] * fl[k] * v[(j, k)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        Ok(out)
    }

    pub fn condition_number(&self) -> T {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(&lo), Some(&hi)) => hi / lo,
            _ => T::one(),
        }
    }
}

/// Orthogonal projector onto the complement of `1_m`: `I − 1 1ᵀ / m`.
pub fn centering_projector<T: Real>(m: usize) -> Matrix<T> {
    let inv_m = T::one() / T::of_usize(m.max(1));
    Matrix::from_fn(m, m, |i, j| if i == j { T::one() - inv_m } else { -inv_m })
}

/// Column mean of a `p × n` sample matrix.
pub fn column_mean<T: Real>(z: &Matrix<T>) -> Vec<T> {
    let inv_n = T::one() / T::of_usize(z.ncols());
    (0..z.nrows())
        .map(|i| z.row(i).iter().copied().sum::<T>() * inv_n)
        .collect()
}

/// Mean `z̄` and centered cross-product `Z Zᵀ − n z̄ z̄ᵀ` without any
/// definiteness check.
pub fn scatter_unchecked<T: Real>(z: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let zbar = column_mean(z);
    let centered = Matrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] - zbar[i]);
    (zbar, centered.gram())
}

/// Sample mean and scatter matrix `S = Z P⊥_n Zᵀ` of the training columns.
pub fn scatter<T: Real>(z: &Matrix<T>) -> Result<(Vec<T>, SymmetricPd<T>)> {
    if z.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    let (zbar, s) = scatter_unchecked(z);
    Ok((zbar, SymmetricPd::new(s)?))
}

/// Symmetric `W` with `W S W = I`.
pub fn inv_sqrt<T: Real>(s: &SymmetricPd<T>) -> Result<Matrix<T>> {
    s.inv_sqrt()
}

/// `I − v vᵀ / (vᵀ v)`.
pub fn unit_orth_projector<T: Real>(v: &[T]) -> Result<Matrix<T>> {
    let nsq = norm_sq(v);
    if !(nsq.sqrt() >= T::tiny()) {
        return Err(Error::ZeroVector);
    }
    let p = v.len();
    Ok(Matrix::from_fn(p, p, |i, j| {
        let id = if i == j { T::one() } else { T::zero() };
        id - v[i] * v[j] / nsq
    }))
}

/// `‖P⊥_v x‖²` without forming the projector.
pub fn orth_residual_sq<T: Real>(v: &[T], x: &[T]) -> T {
    let vx = dot(v, x);
    norm_sq(x) - vx * vx / norm_sq(v)
}

/// Natural log-determinant through the Cholesky factor.
pub fn logdet<T: Real>(s: &SymmetricPd<T>) -> T {
    s.logdet()
}
