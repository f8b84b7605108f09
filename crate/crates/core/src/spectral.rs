//! Spectral abscissa of Metzler matrices.
//!
//! For a Metzler matrix `M` the eigenvalue of largest real part is real. With
//! `s = 1 + max_i |M_ii|` the shifted matrix `B = M + sI` is entrywise
//! nonnegative with a positive diagonal, so `lambda_max(M) = rho(B) - s`.
//!
//! `B` is first split into the strongly connected components of its sparsity
//! pattern. `rho(B)` is the largest Perron root over those irreducible
//! diagonal blocks. A reducible `B` (disconnected graphs, zero synergy) can
//! carry a defective Perron root on which plain power iteration converges
//! only like `1/k`, while every irreducible block with a positive diagonal is
//! primitive. On each block, power iteration from a strictly positive vector
//! stops once the Collatz-Wielandt bracket
//! `min_i (Bv)_i / v_i <= rho <= max_i (Bv)_i / v_i` has closed to the
//! tolerance, so the reported residual is a bound rather than an estimate.
//! Blocks whose largest row sum cannot exceed the best root found so far are
//! skipped.

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::csr::Csr;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::ModelParams;
use crate::sparse::CsrMatrix;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;

const START_SEED: u64 = 0x5eed_1a4b;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralResult {
    pub lambda_max: f64,
    /// Power iterations summed over all blocks that were solved.
    pub iterations: usize,
    /// Width of the final eigenvalue bracket relative to `max(1, |lambda_max|)`.
    pub residual: f64,
    pub shift_used: f64,
}

/// Spectral abscissa of a Metzler matrix, by power iteration on `M + sI`
/// with `s = 1 + max_i |M_ii|`.
pub fn lambda_max_metzler(m: &CsrMatrix, tol: f64, max_iter: usize) -> Result<SpectralResult> {
    let shift = 1.0 + m.diagonal().iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    lambda_max_metzler_with_shift(m, shift, tol, max_iter)
}

/// As [`lambda_max_metzler`] with an explicit shift, which must make every
/// diagonal entry of `M + sI` positive. `max_iter` applies to each
/// irreducible block.
pub fn lambda_max_metzler_with_shift(
    m: &CsrMatrix,
    shift: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be positive"
        )));
    }
    m.check_metzler()?;
    let dim = m.dim();
    if dim == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    if let Some(d) = m.diagonal().iter().find(|d| !(**d + shift > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "shift {shift} leaves diagonal entry {d} nonpositive"
        )));
    }

    let blocks = irreducible_blocks(m);
    let mut block_of = vec![0usize; dim];
    let mut local = vec![0usize; dim];
    for (b, rows) in blocks.iter().enumerate() {
        for (k, &r) in rows.iter().enumerate() {
            block_of[r] = b;
            local[r] = k;
        }
    }

    // rho of a nonnegative matrix is at most its largest row sum
    let mut order: Vec<(f64, usize)> = blocks
        .iter()
        .enumerate()
        .map(|(b, rows)| {
            let bound = rows
                .iter()
                .map(|&r| {
                    let (cols, vals) = m.row(r);
                    let inside: f64 = cols
                        .iter()
                        .zip(vals)
                        .filter(|(c, _)| block_of[**c] == b)
                        .map(|(_, v)| v)
                        .sum();
                    inside + shift
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (bound, b)
        })
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut best: Option<Bracket> = None;
    let mut iterations = 0;
    for (bound, b) in order {
        if best.is_some_and(|br| bound <= br.lo) {
            break;
        }
        let rows = &blocks[b];
        let bracket = if rows.len() == 1 {
            let rho = m.get(rows[0], rows[0]) + shift;
            Bracket {
                estimate: rho,
                lo: rho,
                hi: rho,
            }
        } else {
            let sub = CsrMatrix::from_rows(rows.len(), |i, buf| {
                let (cols, vals) = m.row(rows[i]);
                buf.extend(
                    cols.iter()
                        .zip(vals)
                        .filter(|(c, _)| block_of[**c] == b)
                        .map(|(c, v)| (local[*c], *v)),
                );
            });
            let (bracket, used) = perron_root(&sub, shift, tol, max_iter, &mut rng)?;
            iterations += used;
            bracket
        };
        if best.is_none_or(|br| bracket.estimate > br.estimate) {
            best = Some(bracket);
        }
    }

    let best = best.expect("at least one block");
    let lambda_max = best.estimate - shift;
    Ok(SpectralResult {
        lambda_max,
        iterations,
        residual: (best.hi - best.lo) / lambda_max.abs().max(1.0),
        shift_used: shift,
    })
}

/// Perron root of a shifted block, with certified lower and upper bounds.
#[derive(Debug, Clone, Copy)]
struct Bracket {
    estimate: f64,
    lo: f64,
    hi: f64,
}

/// Row sets of the strongly connected components of the pattern of positive
/// off-diagonal entries.
fn irreducible_blocks(m: &CsrMatrix) -> Vec<Vec<usize>> {
    // every row carries a self-loop so that it is a node even when isolated
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m.nnz() + m.dim());
    for r in 0..m.dim() {
        let start = edges.len();
        edges.push((r as u32, r as u32));
        let (cols, vals) = m.row(r);
        edges.extend(
            cols.iter()
                .zip(vals)
                .filter(|(c, v)| **c != r && **v > 0.0)
                .map(|(c, _)| (r as u32, *c as u32)),
        );
        edges[start..].sort_unstable();
    }
    let pattern: Csr<(), ()> = Csr::from_sorted_edges(&edges).expect("rows are visited in order");
    let mut blocks: Vec<Vec<usize>> = tarjan_scc(&pattern)
        .into_iter()
        .map(|scc| {
            let mut rows: Vec<usize> = scc.into_iter().map(|n| n as usize).collect();
            rows.sort_unstable();
            rows
        })
        .collect();
    blocks.sort_unstable_by_key(|rows| rows[0]);
    blocks
}

/// Power iteration on `M + shift I` for an irreducible `M`, until the
/// Collatz-Wielandt bracket is narrower than `tol * max(1, |lambda|)`.
fn perron_root(
    m: &CsrMatrix,
    shift: f64,
    tol: f64,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Bracket, usize)> {
    let dim = m.dim();
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    let mut w = vec![0.0; dim];
    let mut last = Bracket {
        estimate: f64::NAN,
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    for iter in 1..=max_iter {
        m.mul_vec_into(&v, &mut w);
        let mut norm = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
            norm += *wi;
            if *vi > 0.0 {
                let ratio = *wi / vi;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            } else {
                // underflowed component: no upper bound from this iterate
                hi = f64::INFINITY;
            }
        }
        if !(norm > 0.0 && norm.is_finite()) {
            break;
        }
        last = Bracket {
            estimate: norm.clamp(lo, hi),
            lo,
            hi,
        };
        if hi - lo <= tol * (last.estimate - shift).abs().max(1.0) {
            return Ok((last, iter));
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }

    let lambda = last.estimate - shift;
    Err(Error::NoConvergence {
        iterations: max_iter,
        estimate: lambda,
        residual: (last.hi - last.lo) / lambda.abs().max(1.0),
    })
}

/// Adjacency matrix of `g` in sparse form.
pub fn adjacency_matrix(g: &Graph) -> CsrMatrix {
    CsrMatrix::from_rows(g.num_nodes(), |i, buf| {
        buf.extend(g.neighbors(i).iter().map(|&j| (j, 1.0)))
    })
}

/// Largest adjacency eigenvalue.
pub fn lambda_max_adjacency(g: &Graph, tol: f64, max_iter: usize) -> Result<SpectralResult> {
    lambda_max_metzler(&adjacency_matrix(g), tol, max_iter)
}

/// Growth-rate bound of the SIS model without synergy: `beta * lambda_A - delta`.
pub fn rho_sis_bar(beta: f64, delta: f64, lambda_a: f64) -> f64 {
    beta * lambda_a - delta
}

/// `diag(beta) A - diag(delta)`: the linearised plain-SIS operator with
/// per-node rates.
pub fn sis_matrix(g: &Graph, p: &ModelParams) -> Result<CsrMatrix> {
    if p.num_nodes() != g.num_nodes() {
        return Err(Error::InvalidParameter(format!(
            "{} rate entries for a graph with {} nodes",
            p.num_nodes(),
            g.num_nodes()
        )));
    }
    Ok(CsrMatrix::from_rows(g.num_nodes(), |i, buf| {
        buf.push((i, -p.delta()[i]));
        buf.extend(g.neighbors(i).iter().map(|&j| (j, p.beta()[i])));
    }))
}

/// Conventional growth-rate bound for heterogeneous rates. Equals
/// [`rho_sis_bar`] when the rates are homogeneous.
pub fn rho_sis(g: &Graph, p: &ModelParams, tol: f64, max_iter: usize) -> Result<SpectralResult> {
    lambda_max_metzler(&sis_matrix(g, p)?, tol, max_iter)
}

/// Largest real part over all eigenvalues, from a dense real Schur decomposition.
///
/// Cubic in the dimension; meant for cross-checks and small generators.
pub fn dense_spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Eigensolver(
            "matrix must be square and nonempty".into(),
        ));
    }
    // Exactly repeated eigenvalues can keep the QR sweeps from ever deflating
    // at machine precision; looser thresholds still give ~1e-13 accuracy.
    let max_sweeps = 2_000 + 100 * m.nrows();
    for eps in [8.0 * f64::EPSILON, 1e-14, 1e-12] {
        if let Some(schur) = m.clone().try_schur(eps, max_sweeps) {
            return schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .reduce(f64::max)
                .ok_or_else(|| Error::Eigensolver("no eigenvalues".into()));
        }
    }
    Err(Error::Eigensolver(format!(
        "Schur decomposition of a {0}x{0} matrix did not converge",
        m.nrows()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::moments::build_moment_matrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_edge_bound() {
        let g = Graph::complete(2).unwrap();
        let p = ModelParams::homogeneous(2, 0.5, 1.0, 0.0).unwrap();
        let m = build_moment_matrix(&g, &p).unwrap();
        let r = lambda_max_metzler(m.matrix(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(r.lambda_max, -0.5, epsilon = 1e-10);
        assert_eq!(r.shift_used, 1.0 + 3.0);
    }

    #[test]
    fn diagonal_matrix() {
        let g = Graph::empty(5).unwrap();
        let p = ModelParams::homogeneous(5, 0.3, 1.7, 0.2).unwrap();
        let m = build_moment_matrix(&g, &p).unwrap();
        let r = lambda_max_metzler(m.matrix(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(r.lambda_max, -1.7, epsilon = 1e-9);
    }

    #[test]
    fn adjacency_spectra() {
        let k3 =
            lambda_max_adjacency(&Graph::complete(3).unwrap(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(k3.lambda_max, 2.0, epsilon = 1e-10);
        let star = lambda_max_adjacency(&Graph::star(4).unwrap(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(star.lambda_max, 2.0, epsilon = 1e-10);
        let iso = lambda_max_adjacency(&Graph::empty(3).unwrap(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(iso.lambda_max, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conventional_bound() {
        assert_abs_diff_eq!(rho_sis_bar(0.02, 3.0, 6.7257), -2.865486, epsilon = 1e-12);
        assert_eq!(rho_sis_bar(0.0, 2.5, 6.0), -2.5);
        assert_eq!(rho_sis_bar(0.5, 1.0, 2.0), 0.0);

        let g = Graph::star(3).unwrap();
        let p = ModelParams::homogeneous(4, 0.5, 1.0, 0.2).unwrap();
        let r = rho_sis(&g, &p, 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(
            r.lambda_max,
            rho_sis_bar(0.5, 1.0, 3f64.sqrt()),
            epsilon = 1e-10
        );
    }

    #[test]
    fn rejects_non_metzler_and_bad_tolerance() {
        let m = CsrMatrix::from_triplets(2, &[(0, 1, -0.1), (1, 0, 1.0)]);
        assert!(matches!(
            lambda_max_metzler(&m, 1e-9, 100),
            Err(Error::NotMetzler { .. })
        ));
        let ok = CsrMatrix::from_triplets(2, &[(0, 1, 1.0)]);
        assert!(lambda_max_metzler(&ok, 0.0, 100).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        // two nearly equal roots, weakly coupled into one irreducible block
        let m = CsrMatrix::from_triplets(
            2,
            &[
                (0, 0, -1.0),
                (1, 1, -1.0 - 1e-7),
                (0, 1, 1e-9),
                (1, 0, 1e-9),
            ],
        );
        match lambda_max_metzler(&m, 1e-14, 5) {
            Err(Error::NoConvergence {
                iterations,
                estimate,
                ..
            }) => {
                assert_eq!(iterations, 5);
                assert!((estimate + 1.0).abs() < 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn defective_root_across_blocks() {
        // a Jordan block: plain power iteration would converge like 1/k
        let m = CsrMatrix::from_triplets(
            3,
            &[
                (0, 0, -1.0),
                (1, 1, -1.0),
                (2, 2, -4.0),
                (0, 1, 1.0),
                (1, 2, 1.0),
            ],
        );
        let r = lambda_max_metzler(&m, 1e-12, 10).unwrap();
        assert_eq!(r.lambda_max, -1.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn blocks_follow_strong_connectivity() {
        let m = CsrMatrix::from_triplets(
            5,
            &[
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 2, 1.0),
                (2, 3, 0.5),
                (3, 2, 0.5),
                (4, 4, -1.0),
                (3, 4, 0.0),
            ],
        );
        assert_eq!(
            irreducible_blocks(&m),
            vec![vec![0, 1], vec![2, 3], vec![4]]
        );
        let r = lambda_max_metzler(&m, 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(r.lambda_max, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn dense_oracle_on_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
        assert_abs_diff_eq!(dense_spectral_abscissa(&m).unwrap(), -1.0, epsilon = 1e-12);
    }
}
