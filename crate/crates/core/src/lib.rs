//! Synergistic SIS epidemics on undirected networks.
//!
//! * [`graph`]: edge-list ingestion and adjacency structure.
//! * [`model`]: per-node rates and the synergistic infection rate.
//! * [`sim`]: exact event-driven simulation with the re-infection procedure.
//! * [`moments`]: the moment vector and its Metzler bounding matrix.
//! * [`spectral`]: spectral abscissa of that matrix and the synergy-free bound.
//! * [`exact`]: master equation over all `2^n` states for small networks.
//! * [`sweep`]: extinction-region grids over recovery and transmission rates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod graph;
pub mod model;
pub mod moments;
pub mod sim;
pub mod sparse;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use graph::{karate_club, parse_edge_list, Graph};
pub use model::{infected_neighbor_count, infection_rate, EpidemicState, ModelParams};
pub use moments::{build_moment_matrix, Moment, MomentIndex, MomentMatrix};
pub use sim::{run, run_ensemble, SimConfig, SimResult};
pub use sparse::CsrMatrix;
pub use spectral::{
    lambda_max_adjacency, lambda_max_metzler, rho_sis, rho_sis_bar, SpectralResult,
};
pub use sweep::{classify_boundaries, run_sweep, SweepCell, SweepGrid};
