#![allow(dead_code)]

use rand::Rng;
use synsis::{Graph, ModelParams};

/// Graph on `n` nodes with each possible edge present independently with
/// probability 1/2, i.e. uniform over edge sets.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.5) {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Per-node rates drawn uniformly from `[0, hi]`.
pub fn random_params<R: Rng>(rng: &mut R, n: usize, hi: f64) -> ModelParams {
    let mut draw = || {
        (0..n)
            .map(|_| rng.random_range(0.0..=hi))
            .collect::<Vec<_>>()
    };
    let delta = draw();
    let beta = draw();
    let gamma = draw();
    ModelParams::new(delta, beta, gamma).unwrap()
}
