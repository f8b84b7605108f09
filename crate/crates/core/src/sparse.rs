//! Compressed sparse row storage.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows at or above this count use a parallel matrix-vector product.
const PARALLEL_ROWS: usize = 4096;

/// Square sparse matrix in CSR form. Column indices are sorted and unique
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles row by row. `row(r, buf)` pushes `(col, value)` terms for row
    /// `r` into `buf`; terms landing on the same column are summed in push order.
    pub fn from_rows(dim: usize, mut row: impl FnMut(usize, &mut Vec<(usize, f64)>)) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut buf = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            buf.clear();
            row(r, &mut buf);
            // stable: duplicates keep push order, so sums are reproducible
            buf.sort_by_key(|&(c, _)| c);
            let mut iter = buf.iter().copied();
            if let Some((mut c0, mut acc)) = iter.next() {
                for (c, v) in iter {
                    if c == c0 {
                        acc += v;
                    } else {
                        cols.push(c0);
                        vals.push(acc);
                        c0 = c;
                        acc = v;
                    }
                }
                cols.push(c0);
                vals.push(acc);
            }
            row_ptr.push(cols.len());
        }
        debug_assert!(cols.iter().all(|&c| c < dim));
        CsrMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut by_row = vec![Vec::new(); dim];
        for &(r, c, v) in triplets {
            by_row[r].push((c, v));
        }
        Self::from_rows(dim, |r, buf| buf.extend_from_slice(&by_row[r]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    /// Stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, r)).collect()
    }

    /// `y = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let row_dot = |r: usize| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum::<f64>()
        };
        if self.dim >= PARALLEL_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(r, out)| *out = row_dot(r));
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                *out = row_dot(r);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut by_row = vec![Vec::new(); self.dim];
        for (r, c, v) in self.entries() {
            by_row[c].push((r, v));
        }
        CsrMatrix::from_rows(self.dim, |r, buf| buf.extend_from_slice(&by_row[r]))
    }

    /// First off-diagonal entry that is negative, if any.
    pub fn check_metzler(&self) -> Result<()> {
        match self.entries().find(|&(r, c, v)| r != c && !(v >= 0.0)) {
            None => Ok(()),
            Some((row, col, value)) => Err(Error::NotMetzler { row, col, value }),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }
}
