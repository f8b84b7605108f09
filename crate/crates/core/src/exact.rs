//! Ground truth for small networks via the full `2^n`-state Markov chain.
//!
//! States are bitmasks with bit `i` set when node `i` is infected. The
//! generator `Q` has rate `delta_i` from `s` to `s` with `i` cleared for every
//! infected `i`, and the synergistic infection rate of `i` from `s` to `s` with
//! `i` set for every susceptible `i`. The all-susceptible state has no
//! outgoing transitions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{infection_rate, EpidemicState, ModelParams};
use crate::sparse::CsrMatrix;
use crate::spectral::{dense_spectral_abscissa, lambda_max_metzler};

pub const DEFAULT_NODE_CAP: usize = 12;
/// Integrator absolute and relative error tolerance.
pub const INTEGRATION_TOL: f64 = 1e-10;
/// Above this many transient states the growth rate uses sparse power iteration.
const DENSE_STATE_LIMIT: usize = 1024;
const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactModel {
    n: usize,
    generator: CsrMatrix,
    /// `Q^T`, the right-hand side operator of the forward equation.
    forward: CsrMatrix,
}

/// Builds the generator with the default node cap.
pub fn build_exact(g: &Graph, p: &ModelParams) -> Result<ExactModel> {
    build_exact_with_cap(g, p, DEFAULT_NODE_CAP)
}

pub fn build_exact_with_cap(g: &Graph, p: &ModelParams, cap: usize) -> Result<ExactModel> {
    p.check_graph(g)?;
    let n = g.num_nodes();
    if n > cap || n >= 63 {
        return Err(Error::StateSpaceTooLarge { n, cap });
    }
    let states = 1usize << n;
    let rows: Vec<Vec<(usize, f64)>> = (0..states)
        .into_par_iter()
        .map(|s| {
            let state = EpidemicState::from_mask(n, s as u64);
            let mut row = Vec::with_capacity(n + 1);
            let mut out = 0.0;
            for i in 0..n {
                let bit = 1usize << i;
                let (target, rate) = if s & bit != 0 {
                    (s & !bit, p.delta()[i])
                } else {
                    let r = infection_rate(g, p, &state, i).expect("susceptible node");
                    (s | bit, r)
                };
                if rate > 0.0 {
                    row.push((target, rate));
                    out += rate;
                }
            }
            row.push((s, -out));
            row
        })
        .collect();
    let generator = CsrMatrix::from_rows(states, |s, buf| buf.extend_from_slice(&rows[s]));
    let forward = generator.transpose();
    Ok(ExactModel {
        n,
        generator,
        forward,
    })
}

impl ExactModel {
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        1 << self.n
    }

    /// Transition-rate matrix; row = source state.
    pub fn generator(&self) -> &CsrMatrix {
        &self.generator
    }

    /// `d pi / dt = Q^T pi` for a distribution `pi` over states.
    pub fn derivative(&self, pi: &[f64]) -> Vec<f64> {
        self.forward.mul_vec(pi)
    }

    fn check_mask(&self, mask: u64) -> Result<()> {
        if (mask as usize) < self.num_states() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "state mask {mask:#b} has bits beyond {} nodes",
                self.n
            )))
        }
    }

    /// Sub-generator restricted to the transient (nonempty) states, indexed
    /// by `mask - 1`.
    pub fn transient_block(&self) -> CsrMatrix {
        CsrMatrix::from_rows(self.num_states() - 1, |r, buf| {
            let (cols, vals) = self.generator.row(r + 1);
            buf.extend(
                cols.iter()
                    .zip(vals)
                    .filter(|(&c, _)| c != 0)
                    .map(|(&c, &v)| (c - 1, v)),
            );
        })
    }
}

/// State distribution at each of `times`, starting from the point mass on
/// `initial`. Uses an adaptive Dormand-Prince 5(4) integrator that lands on
/// every requested time.
pub fn integrate_master_equation(
    m: &ExactModel,
    initial: u64,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    m.check_mask(initial)?;
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[0] > w[1])
    {
        return Err(Error::InvalidParameter(
            "times must be finite, nonnegative and increasing".into(),
        ));
    }
    let mut pi = vec![0.0; m.num_states()];
    pi[initial as usize] = 1.0;
    let mut solver = DormandPrince::new(&m.forward, INTEGRATION_TOL);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        solver.advance(&mut pi, t, target)?;
        t = target;
        out.push(pi.clone());
    }
    Ok(out)
}

/// Dormand-Prince 5(4) for the linear system `y' = op * y`, reusing the last
/// stage as the first stage of the next step.
struct DormandPrince<'a> {
    op: &'a CsrMatrix,
    tol: f64,
    h: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    next: Vec<f64>,
    steps: usize,
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl<'a> DormandPrince<'a> {
    fn new(op: &'a CsrMatrix, tol: f64) -> Self {
        let dim = op.dim();
        DormandPrince {
            op,
            tol,
            h: 0.0,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            next: vec![0.0; dim],
            steps: 0,
        }
    }

    fn advance(&mut self, y: &mut Vec<f64>, mut t: f64, target: f64) -> Result<()> {
        if target <= t {
            return Ok(());
        }
        if self.h == 0.0 {
            let scale = self
                .op
                .diagonal()
                .iter()
                .fold(1.0_f64, |a, d| a.max(d.abs()));
            self.h = (0.01 / scale).min(target - t);
        }
        self.op.mul_vec_into(y, &mut self.k[0]);
        while t < target {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::Integrator(format!(
                    "exceeded {MAX_STEPS} steps at t = {t}"
                )));
            }
            let last = t + self.h >= target;
            let h = if last { target - t } else { self.h };
            for stage in 1..7 {
                for (idx, out) in self.tmp.iter_mut().enumerate() {
                    let mut acc = y[idx];
                    for (j, a) in A[stage][..stage].iter().enumerate() {
                        if *a != 0.0 {
                            acc += h * a * self.k[j][idx];
                        }
                    }
                    *out = acc;
                }
                self.op.mul_vec_into(&self.tmp, &mut self.k[stage]);
            }
            // the last stage is evaluated at the fifth-order solution
            self.next.copy_from_slice(&self.tmp);
            let mut err = 0.0_f64;
            for (idx, (yi, ni)) in y.iter().zip(&self.next).enumerate() {
                let e: f64 = h * (0..7).map(|j| E[j] * self.k[j][idx]).sum::<f64>();
                let sc = self.tol + self.tol * yi.abs().max(ni.abs());
                err = err.max(e.abs() / sc);
            }
            if !err.is_finite() {
                return Err(Error::Integrator(format!(
                    "non-finite error estimate at t = {t}"
                )));
            }
            if err <= 1.0 {
                t = if last { target } else { t + h };
                std::mem::swap(y, &mut self.next);
                self.k.swap(0, 6);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a truncated final step that succeeded says nothing about the step size
            if !last || err > 1.0 {
                self.h = h * factor;
            }
            if self.h < 1e-14 * target.max(1.0) {
                return Err(Error::Integrator(format!("step size underflow at t = {t}")));
            }
        }
        Ok(())
    }
}

/// Moments `p_i`, `p_ij` (`i < j`) and `p_ijk` (`i < j < k`) at each time.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectories {
    pub n: usize,
    pub times: Vec<f64>,
    pub moments: Vec<Moments>,
}

/// All moments up to third order of one distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    n: usize,
    singles: Vec<f64>,
    /// Dense `n * n` table, symmetric, diagonal unused.
    pairs: Vec<f64>,
    /// Dense `n^3` table, symmetric under permutation.
    triples: Vec<f64>,
}

impl Moments {
    /// Sums `weights[s]` over masks `s` containing each index set. Linear in
    /// `weights`, so it maps distribution derivatives to moment derivatives.
    pub fn from_weights(n: usize, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), 1 << n);
        let mut singles = vec![0.0; n];
        let mut pairs = vec![0.0; n * n];
        let mut triples = vec![0.0; n * n * n];
        let mut members = Vec::with_capacity(n);
        for (s, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            members.clear();
            members.extend((0..n).filter(|i| s >> i & 1 == 1));
            for (a, &i) in members.iter().enumerate() {
                singles[i] += w;
                for (b, &j) in members.iter().enumerate().skip(a + 1) {
                    pairs[i * n + j] += w;
                    for &k in &members[b + 1..] {
                        triples[(i * n + j) * n + k] += w;
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                pairs[j * n + i] = pairs[i * n + j];
                for k in j + 1..n {
                    let v = triples[(i * n + j) * n + k];
                    for (a, b, c) in [(i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        triples[(a * n + b) * n + c] = v;
                    }
                }
            }
        }
        Moments {
            n,
            singles,
            pairs,
            triples,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// `p_i`.
    pub fn single(&self, i: usize) -> f64 {
        self.singles[i]
    }

    /// `p_ij` for distinct `i`, `j` in either order; `p_ii = p_i`.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.singles[i]
        } else {
            self.pairs[i * self.n + j]
        }
    }

    /// `p_ijk` for pairwise distinct indices in any order; repeated indices
    /// collapse to the lower-order moment.
    pub fn triple(&self, i: usize, j: usize, k: usize) -> f64 {
        if i == j {
            self.pair(i, k)
        } else if i == k || j == k {
            self.pair(i, j)
        } else {
            self.triples[(i * self.n + j) * self.n + k]
        }
    }

    /// Stacked first/second-order vector in moment-index order.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.singles.clone();
        for i in 0..self.n {
            for j in i + 1..self.n {
                v.push(self.pairs[i * self.n + j]);
            }
        }
        v
    }
}

/// Moment trajectories along the master-equation solution.
pub fn moment_trajectories(
    m: &ExactModel,
    initial: u64,
    times: &[f64],
) -> Result<MomentTrajectories> {
    let dists = integrate_master_equation(m, initial, times)?;
    Ok(MomentTrajectories {
        n: m.n,
        times: times.to_vec(),
        moments: dists
            .iter()
            .map(|d| Moments::from_weights(m.n, d))
            .collect(),
    })
}

/// Spectral abscissa of the transient sub-generator: the worst-case
/// exponential rate of the expected infected count over all initial sets.
pub fn exact_growth_rate(m: &ExactModel) -> Result<f64> {
    let block = m.transient_block();
    if block.dim() <= DENSE_STATE_LIMIT {
        dense_spectral_abscissa(&block.to_dense())
    } else {
        Ok(lambda_max_metzler(&block, 1e-12, 1_000_000)?.lambda_max)
    }
}
