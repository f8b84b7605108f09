//! Event-driven simulation of the synergistic SIS Markov chain.
//!
//! Uses the direct method: one exponential waiting time for the total event
//! rate, then a categorical choice of the node that flips. Per-node rates live
//! in a sum tree. When node `v` flips, the infected-neighbor counts of its
//! neighbors change, so the rates of every node within two hops of `v` are
//! recomputed from scratch. Nothing is updated by floating-point increments,
//! so rates never drift.
//!
//! With the re-infection procedure enabled, a uniformly chosen node is
//! infected at the very instant the process would otherwise go extinct.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{EpidemicState, ModelParams};

pub const DEFAULT_HORIZON: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Infect,
    Recover,
    Reinfect,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Infect => "infect",
            EventKind::Recover => "recover",
            EventKind::Reinfect => "reinfect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub node: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Simulated time span `T`.
    pub horizon: f64,
    pub seed: u64,
    /// Re-infect a random node whenever the epidemic dies out.
    pub reinfect: bool,
    /// Nodes infected at time zero.
    pub initial_infected: Vec<usize>,
    /// Increasing instants in `[0, T]` at which the infected count is recorded.
    pub sample_times: Vec<f64>,
    /// Leading time excluded from the time average. Zero by default.
    pub burn_in: f64,
    pub record_events: bool,
}

impl SimConfig {
    /// Re-infection on, nothing initially infected, no samples.
    pub fn new(horizon: f64, seed: u64) -> Self {
        SimConfig {
            horizon,
            seed,
            reinfect: true,
            initial_infected: Vec::new(),
            sample_times: Vec::new(),
            burn_in: 0.0,
            record_events: false,
        }
    }

    pub fn with_all_infected(mut self, n: usize) -> Self {
        self.initial_infected = (0..n).collect();
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!(
                "horizon {} must be positive and finite",
                self.horizon
            ));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return bad(format!("burn-in {} must lie in [0, horizon)", self.burn_in));
        }
        if let Some(&i) = self.initial_infected.iter().find(|&&i| i >= n) {
            return Err(Error::NodeOutOfRange { index: i, n });
        }
        if self
            .sample_times
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= self.horizon))
            || self.sample_times.windows(2).any(|w| w[0] > w[1])
        {
            return bad("sample times must be increasing and lie in [0, horizon]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub events: Option<Vec<Event>>,
    /// `y(T)`: time average of the infected count.
    pub time_average: f64,
    /// `y* = y(T) - 1`.
    pub metastable: f64,
    pub reinfection_count: u64,
    /// Infected count at each configured sample time.
    pub samples: Vec<usize>,
    /// Number of infection and recovery events (re-infections excluded).
    pub event_count: u64,
    /// Time of extinction when re-infection is off and the process died.
    pub extinction_time: Option<f64>,
    pub final_state: EpidemicState,
}

impl SimResult {
    /// Extinct when the meta-stable infected count is below one.
    pub fn is_extinct(&self) -> bool {
        self.metastable < 1.0
    }
}

/// Mixes a base seed with a stream index into an independent seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Binary sum tree over per-node rates. Internal nodes are always recomputed
/// as the sum of their children.
#[derive(Debug, Clone)]
struct RateTree {
    leaves: usize,
    tree: Vec<f64>,
}

impl RateTree {
    fn new(n: usize) -> Self {
        let leaves = n.next_power_of_two();
        RateTree {
            leaves,
            tree: vec![0.0; 2 * leaves],
        }
    }

    fn set(&mut self, i: usize, rate: f64) {
        let mut k = self.leaves + i;
        self.tree[k] = rate;
        while k > 1 {
            k /= 2;
            self.tree[k] = self.tree[2 * k] + self.tree[2 * k + 1];
        }
    }

    fn get(&self, i: usize) -> f64 {
        self.tree[self.leaves + i]
    }

    fn total(&self) -> f64 {
        // a single leaf sits at index 1 and is its own root
        self.tree[1]
    }

    /// Leaf whose cumulative interval contains `u` in `[0, total)`.
    fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.tree[2 * k];
            let right = self.tree[2 * k + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

/// Mutable simulation state: infection indicators plus cached event rates.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    g: &'a Graph,
    p: &'a ModelParams,
    state: EpidemicState,
    /// Infected neighbors of each node, over all of its neighbors.
    infected_neighbors: Vec<usize>,
    rates: RateTree,
    mark: Vec<u64>,
    epoch: u64,
    touched: Vec<usize>,
}

impl<'a> Simulator<'a> {
    pub fn new(g: &'a Graph, p: &'a ModelParams, state: EpidemicState) -> Result<Self> {
        p.check_graph(g)?;
        let n = g.num_nodes();
        if state.num_nodes() != n {
            return Err(Error::InvalidParameter(format!(
                "state covers {} nodes but the graph has {n}",
                state.num_nodes()
            )));
        }
        let infected_neighbors = (0..n)
            .map(|j| {
                g.neighbors(j)
                    .iter()
                    .filter(|&&k| state.is_infected(k))
                    .count()
            })
            .collect();
        let mut sim = Simulator {
            g,
            p,
            state,
            infected_neighbors,
            rates: RateTree::new(n),
            mark: vec![0; n],
            epoch: 0,
            touched: Vec::new(),
        };
        for u in 0..n {
            let r = sim.node_rate_from_counts(u);
            sim.rates.set(u, r);
        }
        Ok(sim)
    }

    pub fn state(&self) -> &EpidemicState {
        &self.state
    }

    /// Sum of all recovery and infection rates in the current state.
    pub fn total_rate(&self) -> f64 {
        self.rates.total()
    }

    /// Recovery rate of an infected node, infection rate of a susceptible one.
    pub fn node_rate(&self, i: usize) -> f64 {
        self.rates.get(i)
    }

    fn node_rate_from_counts(&self, u: usize) -> f64 {
        if self.state.is_infected(u) {
            return self.p.delta()[u];
        }
        let beta_u = self.p.beta()[u];
        let gamma = self.p.gamma();
        let x_u = usize::from(self.state.is_infected(u));
        self.g
            .neighbors(u)
            .iter()
            .filter(|&&j| self.state.is_infected(j))
            .map(|&j| beta_u + gamma[j] * (self.infected_neighbors[j] - x_u) as f64)
            .sum()
    }

    /// Samples the waiting time and the flipping node without applying the
    /// event. `None` when the total rate is zero.
    pub fn next_event<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(f64, usize)> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return None;
        }
        let wait = rng.sample::<f64, _>(Exp1) / total;
        let node = self.rates.find(rng.random::<f64>() * total);
        Some((wait, node))
    }

    /// Flips node `v` and refreshes the rates that depend on it.
    pub fn flip(&mut self, v: usize) -> EventKind {
        let infected = !self.state.is_infected(v);
        self.state.set(v, infected);
        for &j in self.g.neighbors(v) {
            if infected {
                self.infected_neighbors[j] += 1;
            } else {
                self.infected_neighbors[j] -= 1;
            }
        }

        self.epoch += 1;
        self.touched.clear();
        let g = self.g;
        let epoch = self.epoch;
        let visit = |u: usize, mark: &mut Vec<u64>, touched: &mut Vec<usize>| {
            if mark[u] != epoch {
                mark[u] = epoch;
                touched.push(u);
            }
        };
        visit(v, &mut self.mark, &mut self.touched);
        for &j in g.neighbors(v) {
            visit(j, &mut self.mark, &mut self.touched);
            for &k in g.neighbors(j) {
                visit(k, &mut self.mark, &mut self.touched);
            }
        }
        for idx in 0..self.touched.len() {
            let u = self.touched[idx];
            let r = self.node_rate_from_counts(u);
            self.rates.set(u, r);
        }

        if infected {
            EventKind::Infect
        } else {
            EventKind::Recover
        }
    }

    /// Draws and applies one event. `None` signals an absorbing state.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(f64, usize, EventKind)> {
        let (wait, node) = self.next_event(rng)?;
        let kind = self.flip(node);
        Some((wait, node, kind))
    }
}

/// Simulates one trajectory up to the horizon.
pub fn run(g: &Graph, p: &ModelParams, c: &SimConfig) -> Result<SimResult> {
    run_observed(g, p, c, |_, _| {})
}

/// As [`run`], calling `observe(k, state)` at the `k`-th sample time.
pub(crate) fn run_observed(
    g: &Graph,
    p: &ModelParams,
    c: &SimConfig,
    mut observe: impl FnMut(usize, &EpidemicState),
) -> Result<SimResult> {
    let n = g.num_nodes();
    c.validate(n)?;
    let initial = EpidemicState::with_infected(n, &c.initial_infected)?;
    let mut sim = Simulator::new(g, p, initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);

    let horizon = c.horizon;
    let mut events = c.record_events.then(Vec::new);
    let mut samples = Vec::with_capacity(c.sample_times.len());
    let mut next_sample = 0usize;
    let mut area = 0.0;
    let mut t = 0.0;
    let mut reinfections = 0u64;
    let mut event_count = 0u64;
    let mut extinction_time = None;

    loop {
        match sim.next_event(&mut rng) {
            None if c.reinfect && sim.state().infected_count() == 0 => {
                let v = rng.random_range(0..n);
                sim.flip(v);
                reinfections += 1;
                if let Some(ev) = events.as_mut() {
                    ev.push(Event {
                        time: t,
                        node: v,
                        kind: EventKind::Reinfect,
                    });
                }
            }
            next => {
                let t_next = match next {
                    Some((wait, _)) => t + wait,
                    None => {
                        // absorbed, or frozen with zero recovery rates
                        if sim.state().infected_count() == 0 {
                            extinction_time.get_or_insert(t);
                        }
                        f64::INFINITY
                    }
                };
                let end = t_next.min(horizon);
                let count = sim.state().infected_count();
                let lo = t.max(c.burn_in);
                if end > lo {
                    area += count as f64 * (end - lo);
                }
                while next_sample < c.sample_times.len()
                    && (c.sample_times[next_sample] < end || end == horizon)
                {
                    observe(next_sample, sim.state());
                    samples.push(count);
                    next_sample += 1;
                }
                if t_next >= horizon {
                    break;
                }
                let (_, node) = next.expect("finite event time");
                let kind = sim.flip(node);
                event_count += 1;
                t = t_next;
                if let Some(ev) = events.as_mut() {
                    ev.push(Event {
                        time: t,
                        node,
                        kind,
                    });
                }
            }
        }
    }

    let time_average = area / (horizon - c.burn_in);
    Ok(SimResult {
        events,
        time_average,
        metastable: time_average - 1.0,
        reinfection_count: reinfections,
        samples,
        event_count,
        extinction_time,
        final_state: sim.state,
    })
}

/// Independent runs with seeds derived from `c.seed` and the run index.
/// Results are returned in run order regardless of scheduling.
pub fn run_ensemble(
    g: &Graph,
    p: &ModelParams,
    c: &SimConfig,
    runs: usize,
) -> Result<Vec<SimResult>> {
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = SimConfig {
                seed: derive_seed(c.seed, r as u64),
                ..c.clone()
            };
            run(g, p, &cfg)
        })
        .collect()
}

/// Monte-Carlo estimate of per-node infection probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityEstimate {
    pub times: Vec<f64>,
    /// `mean[k][i]`: fraction of runs with node `i` infected at `times[k]`.
    pub mean: Vec<Vec<f64>>,
    /// Binomial standard error of each mean.
    pub std_err: Vec<Vec<f64>>,
    pub runs: usize,
}

/// Estimates `P(x_i(t) = 1)` at the configured sample times from `runs`
/// independent trajectories without re-infection.
pub fn estimate_infection_probabilities(
    g: &Graph,
    p: &ModelParams,
    c: &SimConfig,
    runs: usize,
) -> Result<ProbabilityEstimate> {
    if runs == 0 {
        return Err(Error::InvalidParameter(
            "at least one run is required".into(),
        ));
    }
    if c.sample_times.is_empty() {
        return Err(Error::InvalidParameter("sample times are required".into()));
    }
    if c.reinfect {
        return Err(Error::InvalidParameter(
            "infection probabilities are estimated without re-infection".into(),
        ));
    }
    let n = g.num_nodes();
    let k = c.sample_times.len();
    let cfg = SimConfig {
        record_events: false,
        ..c.clone()
    };

    let counts = (0..runs)
        .into_par_iter()
        .map(|r| {
            let run_cfg = SimConfig {
                seed: derive_seed(cfg.seed, r as u64),
                ..cfg.clone()
            };
            let mut hits = vec![0u64; k * n];
            run_observed(g, p, &run_cfg, |s, state| {
                for i in state.infected_nodes() {
                    hits[s * n + i] += 1;
                }
            })?;
            Ok(hits)
        })
        .try_reduce(
            || vec![0u64; k * n],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    let total = runs as f64;
    let mean: Vec<Vec<f64>> = (0..k)
        .map(|s| (0..n).map(|i| counts[s * n + i] as f64 / total).collect())
        .collect();
    let std_err = mean
        .iter()
        .map(|row| {
            row.iter()
                .map(|&m| (m * (1.0 - m) / total).sqrt())
                .collect()
        })
        .collect();
    Ok(ProbabilityEstimate {
        times: c.sample_times.clone(),
        mean,
        std_err,
        runs,
    })
}

/// Writes an event log as CSV with header `time,node_label,event`.
pub fn write_event_log<W: Write>(g: &Graph, events: &[Event], mut out: W) -> io::Result<()> {
    writeln!(out, "time,node_label,event")?;
    for ev in events {
        writeln!(out, "{},{},{}", ev.time, g.label(ev.node), ev.kind.as_str())?;
    }
    Ok(())
}
