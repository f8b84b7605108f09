//! Extinction-region grids over (delta, beta).
//!
//! Every cell runs with homogeneous rates and records three verdicts:
//! * simulated extinction, `y* < 1`;
//! * extinction implied by the moment bound, `lambda_max(M) < 0`;
//! * extinction implied by the synergy-free bound, `beta lambda_max(A) - delta < 0`.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::ModelParams;
use crate::moments::build_moment_matrix;
use crate::sim::{derive_seed, run_ensemble, SimConfig, DEFAULT_HORIZON};
use crate::spectral::{
    lambda_max_adjacency, lambda_max_metzler, rho_sis_bar, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

pub const CSV_HEADER: &str = "delta,beta,y_star,lambda_M,rho_sis,in_E,in_E_lower,in_E_sis";
pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_RUNS_PER_CELL: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    /// Increasing recovery rates (grid rows).
    pub delta_values: Vec<f64>,
    /// Increasing transmission rates (grid columns within a row).
    pub beta_values: Vec<f64>,
    pub gamma: f64,
    /// Template for every run. An empty initial set means all nodes start infected.
    pub sim: SimConfig,
    pub runs_per_cell: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl SweepGrid {
    /// 10 x 10 log grid, delta in [0.05, 5], beta in [0.002, 0.2], gamma = 0.01,
    /// horizon 1e4, four runs per cell.
    pub fn default_grid(seed: u64) -> Self {
        SweepGrid {
            delta_values: log_space(0.05, 5.0, 10).expect("valid axis"),
            beta_values: log_space(0.002, 0.2, 10).expect("valid axis"),
            gamma: DEFAULT_GAMMA,
            sim: SimConfig::new(DEFAULT_HORIZON, seed),
            runs_per_cell: DEFAULT_RUNS_PER_CELL,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.delta_values.len() * self.beta_values.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("delta", &self.delta_values), ("beta", &self.beta_values)] {
            if axis.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} axis is empty")));
            }
            if axis.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "{name} values must be positive"
                )));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "{name} values must be increasing"
                )));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma {} must be nonnegative",
                self.gamma
            )));
        }
        if self.runs_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "runs per cell must be positive".into(),
            ));
        }
        if !self.sim.reinfect {
            return Err(Error::InvalidParameter(
                "sweeps require the re-infection procedure".into(),
            ));
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 || (n == 1 && lo != hi) {
        return Err(Error::InvalidParameter(format!(
            "bad log axis {lo}:{hi}:{n}"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|k| match k {
            0 => lo,
            _ if k == n - 1 => hi,
            _ => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) || n == 0 || (n == 1 && lo != hi) {
        return Err(Error::InvalidParameter(format!(
            "bad linear axis {lo}:{hi}:{n}"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub delta: f64,
    pub beta: f64,
    pub y_star: f64,
    pub lambda_m: f64,
    pub rho_sis: f64,
    pub in_e: bool,
    pub in_e_lower: bool,
    pub in_e_sis: bool,
}

impl SweepCell {
    fn new(delta: f64, beta: f64, y_star: f64, lambda_m: f64, rho_sis: f64) -> Self {
        SweepCell {
            delta,
            beta,
            y_star,
            lambda_m,
            rho_sis,
            in_e: y_star < 1.0,
            in_e_lower: lambda_m < 0.0,
            in_e_sis: rho_sis < 0.0,
        }
    }
}

/// Evaluates every grid cell, delta outer and beta inner.
pub fn run_sweep(g: &Graph, grid: &SweepGrid) -> Result<Vec<SweepCell>> {
    grid.validate()?;
    let n = g.num_nodes();
    let lambda_a = lambda_max_adjacency(g, grid.tol, grid.max_iter)?.lambda_max;
    let mut template = grid.sim.clone();
    template.record_events = false;
    if template.initial_infected.is_empty() {
        template.initial_infected = (0..n).collect();
    }
    let nb = grid.beta_values.len();

    (0..grid.num_cells())
        .into_par_iter()
        .map(|cell| {
            let delta = grid.delta_values[cell / nb];
            let beta = grid.beta_values[cell % nb];
            evaluate_cell(g, grid, &template, lambda_a, cell, delta, beta).map_err(|e| {
                Error::Cell {
                    delta,
                    beta,
                    source: Box::new(e),
                }
            })
        })
        .collect()
}

fn evaluate_cell(
    g: &Graph,
    grid: &SweepGrid,
    template: &SimConfig,
    lambda_a: f64,
    cell: usize,
    delta: f64,
    beta: f64,
) -> Result<SweepCell> {
    let params = ModelParams::homogeneous(g.num_nodes(), beta, delta, grid.gamma)?;
    let m = build_moment_matrix(g, &params)?;
    let lambda_m = lambda_max_metzler(m.matrix(), grid.tol, grid.max_iter)?.lambda_max;
    let cfg = SimConfig {
        seed: derive_seed(template.seed, cell as u64),
        ..template.clone()
    };
    let runs = run_ensemble(g, &params, &cfg, grid.runs_per_cell)?;
    let y_star = runs.iter().map(|r| r.metastable).sum::<f64>() / runs.len() as f64;
    Ok(SweepCell::new(
        delta,
        beta,
        y_star,
        lambda_m,
        rho_sis_bar(beta, delta, lambda_a),
    ))
}

/// Largest beta classified extinct in one delta row, per criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryColumn {
    pub delta: f64,
    pub simulated: Option<f64>,
    pub moment_bound: Option<f64>,
    pub sis_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSummary {
    pub columns: Vec<BoundaryColumn>,
    pub cells: usize,
    pub in_e: usize,
    pub in_e_lower: usize,
    pub in_e_sis: usize,
    /// Cells the moment bound calls extinct but simulation does not.
    pub lower_outside_e: usize,
    /// Cells the synergy-free bound calls extinct but simulation does not.
    pub sis_outside_e: usize,
}

/// Discrete boundaries of the three extinction regions.
pub fn classify_boundaries(cells: &[SweepCell]) -> Result<RegionSummary> {
    if cells.is_empty() {
        return Err(Error::IncompleteGrid("no cells".into()));
    }
    let mut deltas: Vec<f64> = Vec::new();
    for c in cells {
        if deltas.last() != Some(&c.delta) {
            deltas.push(c.delta);
        }
    }
    if deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::IncompleteGrid(
            "delta values are not grouped in increasing order".into(),
        ));
    }
    let nb = cells.len() / deltas.len();
    if nb * deltas.len() != cells.len() {
        return Err(Error::IncompleteGrid(format!(
            "{} cells do not fill {} delta rows",
            cells.len(),
            deltas.len()
        )));
    }
    let betas: Vec<f64> = cells[..nb].iter().map(|c| c.beta).collect();
    for (r, row) in cells.chunks(nb).enumerate() {
        if row.iter().map(|c| c.beta).ne(betas.iter().copied())
            || row.iter().any(|c| c.delta != deltas[r])
        {
            return Err(Error::IncompleteGrid(format!(
                "row delta = {} has a different beta axis",
                deltas[r]
            )));
        }
    }

    let max_beta = |row: &[SweepCell], pick: fn(&SweepCell) -> bool| {
        row.iter()
            .filter(|c| pick(c))
            .map(|c| c.beta)
            .reduce(f64::max)
    };
    let columns = cells
        .chunks(nb)
        .zip(&deltas)
        .map(|(row, &delta)| BoundaryColumn {
            delta,
            simulated: max_beta(row, |c| c.in_e),
            moment_bound: max_beta(row, |c| c.in_e_lower),
            sis_bound: max_beta(row, |c| c.in_e_sis),
        })
        .collect();
    let count = |pick: fn(&SweepCell) -> bool| cells.iter().filter(|c| pick(c)).count();
    Ok(RegionSummary {
        columns,
        cells: cells.len(),
        in_e: count(|c| c.in_e),
        in_e_lower: count(|c| c.in_e_lower),
        in_e_sis: count(|c| c.in_e_sis),
        lower_outside_e: count(|c| c.in_e_lower && !c.in_e),
        sis_outside_e: count(|c| c.in_e_sis && !c.in_e),
    })
}

/// Writes the sweep table: header line, then one row per cell.
pub fn write_csv<W: Write>(cells: &[SweepCell], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_sig9(c.delta),
            format_sig9(c.beta),
            format_sig9(c.y_star),
            format_sig9(c.lambda_m),
            format_sig9(c.rho_sis),
            u8::from(c.in_e),
            u8::from(c.in_e_lower),
            u8::from(c.in_e_sis),
        )?;
    }
    Ok(())
}

/// Nine significant digits, printf `%.9g` style.
pub fn format_sig9(x: f64) -> String {
    const PRECISION: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
