//! Row-major dense matrix.
//!
//! Storage is `data[i * cols + j]`. The `vec` operator used throughout the
//! estimators stacks *columns*, so `vec(A)[j * rows + i] = A[i, j]`; the
//! conversion helpers below are the only place that mapping lives.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

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

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
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

    /// Panics on ragged input; intended for literals in tests and examples.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols: ncols,
            data,
        }
    }

    /// Inverse of [`DenseMatrix::vec`]: column-stacked data into a
    /// `rows × cols` matrix.
    pub fn from_vec_col_major(rows: usize, cols: usize, v: &[T]) -> Self {
        assert_eq!(v.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| v[j * rows + i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Column-stacking vectorization.
    pub fn vec(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn expect_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }

    /// Matrix product. Rows of the output are computed independently so the
    /// result does not depend on the worker count.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: (self.cols, other.cols),
                got: other.shape(),
            });
        }
        let n = other.cols;
        let mut out = Self::zeros(self.rows, n);
        if n == 0 {
            return Ok(out);
        }
        out.data
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out_row)| {
                for (k, &a) in self.row(i).iter().enumerate() {
                    if a != T::zero() {
                        axpy(a, other.row(k), out_row);
                    }
                }
            });
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: (self.cols, 1),
                got: (v.len(), 1),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.expect_shape(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.expect_shape(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.expect_shape(other)?;
        Ok(self.zip_map(other, |a, b| a * b))
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> T {
        self.diag().into_iter().sum()
    }

    /// Explicit Kronecker product `self ⊗ other`. Only for small operands;
    /// the estimators never call this.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = other.shape();
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    /// Copies the upper triangle onto the lower one.
    pub(crate) fn mirror_upper(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                self.data[i * n + j] = self.data[j * n + i];
            }
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with eight independent partial sums so the loop vectorizes.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += a * x`
#[inline]
pub fn axpy<T: Real>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Accumulates the upper triangle of `A Aᵀ` into `acc` (`rows × rows`).
pub(crate) fn accumulate_aat_upper<T: Real>(acc: &mut DenseMatrix<T>, a: &DenseMatrix<T>) {
    let n = a.rows();
    debug_assert_eq!(acc.shape(), (n, n));
    acc.data
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, acc_row)| {
            let ri = a.row(i);
            for j in i..n {
                acc_row[j] += dot(ri, a.row(j));
            }
        });
}

/// Accumulates the upper triangle of `Aᵀ A` into `acc` (`cols × cols`).
pub(crate) fn accumulate_ata_upper<T: Real>(acc: &mut DenseMatrix<T>, a: &DenseMatrix<T>) {
    let q = a.cols();
    debug_assert_eq!(acc.shape(), (q, q));
    acc.data
        .par_chunks_mut(q)
        .enumerate()
        .for_each(|(j, acc_row)| {
            for r in 0..a.rows() {
                let row = a.row(r);
                let s = row[j];
                if s != T::zero() {
                    axpy(s, &row[j..], &mut acc_row[j..]);
                }
            }
        });
}
