//! Row-major dataset container shared by the planner, tree builder and
//! the search pipeline.

use alloc::vec::Vec;

use crate::error::CoreError;

/// An `n x d` row-major matrix of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Matrix {
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self, CoreError> {
        if data.len() != n * d {
            return Err(CoreError::LengthMismatch { expected: n * d, actual: data.len() });
        }
        if n == 0 || d == 0 {
            return Err(CoreError::EmptyInput("matrix must have at least one row and column"));
        }
        Ok(Matrix { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CoreError> {
        let n = rows.len();
        if n == 0 {
            return Err(CoreError::EmptyInput("no rows"));
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(n * d);
        for row in rows {
            if row.len() != d {
                return Err(CoreError::LengthMismatch { expected: d, actual: row.len() });
            }
            data.extend_from_slice(row);
        }
        Matrix::new(data, n, d)
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.d + j]).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }
}
