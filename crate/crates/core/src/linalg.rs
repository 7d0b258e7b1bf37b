//! Small dense matrices over a [`Scalar`] field, with Gaussian elimination.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("shape mismatch: {0}x{1} against {2}x{3}")]
    Shape(usize, usize, usize, usize),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[S]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = x.clone();
        }
    }

    pub fn mul(&self, other: &Matrix<S>) -> Result<Matrix<S>, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Shape(self.rows, self.cols, other.rows, other.cols));
        }
        let mut out = Matrix::<S>::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out.data[i * other.cols + j].add_product(a, b);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![S::zero(); self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, x) in v.iter().enumerate() {
                let a = &self[(i, j)];
                if !a.is_zero() && !x.is_zero() {
                    o.add_product(a, x);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Solves `self * X = rhs` for a square `self`.
    pub fn solve(&self, rhs: &Matrix<S>) -> Result<Matrix<S>, LinalgError> {
        if !self.is_square() || rhs.rows != self.rows {
            return Err(LinalgError::Shape(self.rows, self.cols, rhs.rows, rhs.cols));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let pivot = if S::EXACT {
                (col..n).find(|&r| !a[(r, col)].is_zero())
            } else {
                (col..n)
                    .filter(|&r| !a[(r, col)].is_zero())
                    .max_by(|&x, &y| {
                        a[(x, col)].magnitude().total_cmp(&a[(y, col)].magnitude())
                    })
            };
            let p = pivot.ok_or(LinalgError::Singular)?;
            if p != col {
                a.swap_rows(p, col);
                b.swap_rows(p, col);
            }
            let inv = S::one() / a[(col, col)].clone();
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let factor = a[(r, col)].mul_ref(&inv);
                for c in col..n {
                    if !a[(col, c)].is_zero() {
                        let t = factor.mul_ref(&a[(col, c)]);
                        a[(r, c)] -= t;
                    }
                }
                for c in 0..m {
                    if !b[(col, c)].is_zero() {
                        let t = factor.mul_ref(&b[(col, c)]);
                        b[(r, c)] -= t;
                    }
                }
            }
        }
        for r in 0..n {
            let inv = S::one() / a[(r, r)].clone();
            for c in 0..m {
                if !b[(r, c)].is_zero() {
                    b[(r, c)] = b[(r, c)].mul_ref(&inv);
                }
            }
        }
        Ok(b)
    }

    pub fn solve_vec(&self, rhs: &[S]) -> Result<Vec<S>, LinalgError> {
        let mut b = Matrix::zeros(rhs.len(), 1);
        b.set_column(0, rhs);
        Ok(self.solve(&b)?.column(0))
    }

    pub fn inverse(&self) -> Result<Matrix<S>, LinalgError> {
        self.solve(&Matrix::identity(self.rows))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Singular values in descending order, computed in binary64.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Vec::new();
        }
        let m = nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_f64());
        let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}
