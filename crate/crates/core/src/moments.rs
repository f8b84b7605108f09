//! First- and second-order moment vector and its linear bounding matrix.
//!
//! The moment vector stacks `p_i = E[x_i]` for every node, followed by
//! `p_ij = E[x_i x_j]` for every unordered pair `i < j` in lexicographic
//! order, for `(n^2 + n) / 2` entries in total. [`build_moment_matrix`]
//! assembles the Metzler matrix `M` with `dp/dt <= M p` componentwise along
//! every trajectory of the synergistic SIS process, so that the spectral
//! abscissa of `M` bounds the growth rate of the expected infected count.
//!
//! The bound drops the negative second-order terms `-beta_i p_ij` from the
//! first-order equations; keeping them would break the Metzler structure.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::ModelParams;
use crate::sparse::CsrMatrix;

/// Position of each first/second moment in the stacked vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentIndex {
    n: usize,
    dim: usize,
}

/// A single entry of the moment vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    Single(usize),
    Pair(usize, usize),
}

impl MomentIndex {
    pub fn new(n: usize) -> Self {
        MomentIndex {
            n,
            dim: (n * n + n) / 2,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn single(&self, i: usize) -> Result<usize> {
        if i < self.n {
            Ok(i)
        } else {
            Err(Error::NodeOutOfRange {
                index: i,
                n: self.n,
            })
        }
    }

    /// Slot of `p_ij = p_ji`. Rejects `i == j`: `p_ii` is not part of the vector.
    pub fn pair(&self, i: usize, j: usize) -> Result<usize> {
        for v in [i, j] {
            self.single(v)?;
        }
        if i == j {
            return Err(Error::InvalidParameter(format!(
                "pair moment needs two distinct nodes, got ({i}, {j})"
            )));
        }
        Ok(self.pair_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn pair_unchecked(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.n + a * self.n - a * (a + 1) / 2 + (b - a - 1)
    }

    /// Inverse of [`single`](Self::single) and [`pair`](Self::pair).
    pub fn moment(&self, k: usize) -> Option<Moment> {
        if k < self.n {
            return Some(Moment::Single(k));
        }
        if k >= self.dim {
            return None;
        }
        let mut offset = k - self.n;
        for a in 0..self.n {
            let row_len = self.n - a - 1;
            if offset < row_len {
                return Some(Moment::Pair(a, a + 1 + offset));
            }
            offset -= row_len;
        }
        None
    }
}

/// The bounding matrix `M`, stored sparse, together with its index map.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    index: MomentIndex,
    matrix: CsrMatrix,
}

impl MomentMatrix {
    pub fn index(&self) -> &MomentIndex {
        &self.index
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.index.dim
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix.get(row, col)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.matrix.entries()
    }

    /// `M p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(p)
    }

    /// Coordinate-format dump: a `dim nnz` header, then one `row col value`
    /// line per stored entry in row-major order.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.dim(), self.nnz())?;
        for (r, c, v) in self.entries() {
            writeln!(out, "{r} {c} {v:e}")?;
        }
        Ok(())
    }
}

/// Assembles `M` for graph `g` and rates `p`.
pub fn build_moment_matrix(g: &Graph, p: &ModelParams) -> Result<MomentMatrix> {
    p.check_graph(g)?;
    let n = g.num_nodes();
    let index = MomentIndex::new(n);
    let (delta, beta, gamma) = (p.delta(), p.beta(), p.gamma());

    let matrix = CsrMatrix::from_rows(index.dim, |row, buf| {
        match index.moment(row) {
            Some(Moment::Single(i)) => {
                buf.push((i, -delta[i]));
                for &j in g.neighbors(i) {
                    if beta[i] != 0.0 {
                        buf.push((j, beta[i]));
                    }
                }
                // synergy: infected neighbor j of i together with k in N(j) \ {i}
                for &j in g.neighbors(i) {
                    if gamma[j] == 0.0 {
                        continue;
                    }
                    for &k in g.neighbors(j) {
                        if k != i {
                            buf.push((index.pair_unchecked(j, k), gamma[j]));
                        }
                    }
                }
            }
            Some(Moment::Pair(i, l)) => {
                let adjacent = g.is_adjacent(i, l);
                let mut off = |col: usize, v: f64| {
                    assert_ne!(
                        col, row,
                        "off-diagonal term hit the diagonal of pair ({i}, {l})"
                    );
                    if v != 0.0 {
                        buf.push((col, v));
                    }
                };

                // node l becoming infected while i is infected
                if adjacent {
                    off(i, beta[l]);
                }
                for &m in g.neighbors(l) {
                    if m != i {
                        off(index.pair_unchecked(i, m), beta[l]);
                    }
                }
                for &m in g.neighbors(l) {
                    if gamma[m] == 0.0 {
                        continue;
                    }
                    for &nn in g.neighbors(m) {
                        if nn != l {
                            off(index.pair_unchecked(m, nn), gamma[m]);
                        }
                    }
                }

                // node i becoming infected while l is infected
                if adjacent {
                    off(l, beta[i]);
                }
                for &j in g.neighbors(i) {
                    if j != l {
                        off(index.pair_unchecked(j, l), beta[i]);
                    }
                }
                for &j in g.neighbors(i) {
                    if gamma[j] == 0.0 {
                        continue;
                    }
                    for &k in g.neighbors(j) {
                        if k != i {
                            off(index.pair_unchecked(k, j), gamma[j]);
                        }
                    }
                }

                let mut diag = -(delta[l] + delta[i]);
                if adjacent {
                    diag -= beta[l] + beta[i];
                }
                buf.push((row, diag));
            }
            None => unreachable!("row {row} outside the moment index"),
        }
    });

    Ok(MomentMatrix { index, matrix })
}
