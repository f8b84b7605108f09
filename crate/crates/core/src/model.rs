//! Per-node rates and the synergistic infection rate.
//!
//! A susceptible node `i` with an infected neighbor `j` is infected by `j` at
//! rate `beta[i] + gamma[j] * m_j`, where `m_j` counts the infected neighbors
//! of `j` other than `i`.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Recovery, transmission and synergy rates, one entry per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    delta: Vec<f64>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
}

impl ModelParams {
    pub fn new(delta: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let n = delta.len();
        if n == 0 {
            return Err(Error::InvalidParameter("rate vectors are empty".into()));
        }
        if beta.len() != n || gamma.len() != n {
            return Err(Error::InvalidParameter(format!(
                "rate vectors have different lengths (delta {}, beta {}, gamma {})",
                n,
                beta.len(),
                gamma.len()
            )));
        }
        for (name, values) in [("delta", &delta), ("beta", &beta), ("gamma", &gamma)] {
            if let Some((i, v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0)
            {
                return Err(Error::InvalidParameter(format!(
                    "{name}[{i}] = {v} must be finite and nonnegative"
                )));
            }
        }
        Ok(ModelParams { delta, beta, gamma })
    }

    /// Identical rates at every node.
    pub fn homogeneous(n: usize, beta: f64, delta: f64, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "node count must be positive".into(),
            ));
        }
        Self::new(vec![delta; n], vec![beta; n], vec![gamma; n])
    }

    pub fn num_nodes(&self) -> usize {
        self.delta.len()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `Some((beta, delta, gamma))` when every node carries the same rates.
    pub fn as_homogeneous(&self) -> Option<(f64, f64, f64)> {
        let same = |v: &[f64]| v.iter().all(|x| *x == v[0]);
        (same(&self.beta) && same(&self.delta) && same(&self.gamma))
            .then(|| (self.beta[0], self.delta[0], self.gamma[0]))
    }

    pub(crate) fn check_graph(&self, g: &Graph) -> Result<()> {
        if self.num_nodes() != g.num_nodes() {
            return Err(Error::InvalidParameter(format!(
                "parameters cover {} nodes but the graph has {}",
                self.num_nodes(),
                g.num_nodes()
            )));
        }
        Ok(())
    }
}

/// Infection indicator of every node at one instant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpidemicState {
    x: Vec<bool>,
    infected_count: usize,
}

impl EpidemicState {
    /// All nodes susceptible.
    pub fn susceptible(n: usize) -> Self {
        EpidemicState {
            x: vec![false; n],
            infected_count: 0,
        }
    }

    pub fn with_infected(n: usize, infected: &[usize]) -> Result<Self> {
        let mut s = Self::susceptible(n);
        for &i in infected {
            if i >= n {
                return Err(Error::NodeOutOfRange { index: i, n });
            }
            s.set(i, true);
        }
        Ok(s)
    }

    /// State encoded by a bitmask (bit `i` is node `i`).
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let infected_count = x.iter().filter(|b| **b).count();
        EpidemicState { x, infected_count }
    }

    pub fn num_nodes(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn is_infected(&self, i: usize) -> bool {
        self.x[i]
    }

    pub fn infected_count(&self) -> usize {
        self.infected_count
    }

    pub fn indicators(&self) -> &[bool] {
        &self.x
    }

    pub fn infected_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.x
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| i)
    }

    /// Sets `x_i`, keeping the infected count in sync.
    pub fn set(&mut self, i: usize, infected: bool) {
        if self.x[i] != infected {
            self.x[i] = infected;
            if infected {
                self.infected_count += 1;
            } else {
                self.infected_count -= 1;
            }
        }
    }
}

/// Number of infected neighbors of `j`, not counting node `excluding`.
pub fn infected_neighbor_count(
    g: &Graph,
    s: &EpidemicState,
    j: usize,
    excluding: usize,
) -> Result<usize> {
    g.check_node(j)?;
    g.check_node(excluding)?;
    Ok(g.neighbors(j)
        .iter()
        .filter(|&&k| k != excluding && s.is_infected(k))
        .count())
}

/// Total rate at which susceptible node `i` becomes infected.
///
/// Sums `beta[i] + gamma[j] * m_j` over infected neighbors `j` of `i`, with
/// `m_j` the infected neighbors of `j` other than `i`.
pub fn infection_rate(g: &Graph, p: &ModelParams, s: &EpidemicState, i: usize) -> Result<f64> {
    g.check_node(i)?;
    if s.is_infected(i) {
        return Err(Error::ContractViolation(format!(
            "infection rate requested for infected node {i}"
        )));
    }
    let beta_i = p.beta[i];
    let mut rate = 0.0;
    for &j in g.neighbors(i) {
        if s.is_infected(j) {
            let m_j = g
                .neighbors(j)
                .iter()
                .filter(|&&k| k != i && s.is_infected(k))
                .count();
            rate += beta_i + p.gamma[j] * m_j as f64;
        }
    }
    Ok(rate)
}
