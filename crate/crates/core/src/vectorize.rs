//! Column-stacking vectorization.
//!
//! The single place where matrix entries and flat vector indices meet:
//! `x[(j) * n + i] = X[i, j]` (0-based), i.e. `x = vec(X)` stacks the columns
//! of `X`. Every Kronecker identity in this crate assumes this convention, so
//! all conversions must go through this pair.

use nalgebra::{DMatrix, DVector};

/// Flattens `X` column by column.
pub fn vec_of(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec_of`] for an `n x n` matrix.
pub fn unvec(x: &DVector<f64>, n: usize) -> DMatrix<f64> {
    assert_eq!(x.len(), n * n, "vector length {} is not {n}x{n}", x.len());
    DMatrix::from_column_slice(n, n, x.as_slice())
}

/// Flat index of entry `(i, j)` under the column-stacking convention.
pub fn flat_index(i: usize, j: usize, n: usize) -> usize {
    j * n + i
}
