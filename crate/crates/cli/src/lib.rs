//! Command implementations behind the `synsis` binary.
//!
//! Each `cmd_*` returns the human-readable report and pushes warnings meant
//! for standard error into `warn`, also when the command then fails.
//! Machine-readable output (CSV, coordinate dumps) goes only to the file
//! named by `--out`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use synsis::exact::{build_exact_with_cap, exact_growth_rate, DEFAULT_NODE_CAP};
use synsis::sim::{run_ensemble, write_event_log, SimConfig, DEFAULT_HORIZON};
use synsis::spectral::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use synsis::sweep::{
    classify_boundaries, format_sig9, lin_space, log_space, write_csv, DEFAULT_GAMMA,
    DEFAULT_RUNS_PER_CELL,
};
use synsis::{
    build_moment_matrix, karate_club, lambda_max_adjacency, lambda_max_metzler, parse_edge_list,
    rho_sis, run_sweep, Graph, ModelParams, SweepGrid,
};
use thiserror::Error;

/// `--graph` value selecting the bundled Zachary karate club.
pub const BUILTIN_KARATE: &str = "@karate";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Model(#[from] synsis::Error),
}

impl CliError {
    /// 1 for usage and validation errors, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "synsis",
    version,
    about = "Synergistic SIS epidemics: simulation, growth-rate bounds, exact oracle"
)]
pub struct Cli {
    /// Worker threads for Monte-Carlo runs and sweeps [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moment-matrix bound against the conventional SIS bound
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Gillespie simulation with the re-infection procedure
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Event log CSV of the first run
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact growth rate from the master equation (small graphs)
    Exact {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Largest accepted node count
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        cap: usize,
    },
    /// Sweep a (delta, beta) grid and write the region CSV
    Sweep(SweepArgs),
    /// Write the moment matrix in coordinate format
    Matrix {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Edge list file, or @karate for the bundled karate club
    #[arg(long)]
    pub graph: String,
    /// Recovery rate of every node
    #[arg(long, required_unless_present = "params", conflicts_with = "params")]
    pub delta: Option<f64>,
    /// Infection rate of every node
    #[arg(long, required_unless_present = "params", conflicts_with = "params")]
    pub beta: Option<f64>,
    /// Synergy of every node
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Per-node rates as CSV lines `label,delta,beta,gamma`
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative accuracy of the largest-eigenvalue solver
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Power-iteration budget
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Simulated time span T
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent runs
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Let the process die out instead of re-infecting a random node
    #[arg(long)]
    pub no_reinfect: bool,
    /// Comma-separated labels infected at time zero [default: all nodes]
    #[arg(long)]
    pub initial: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Edge list file, or @karate for the bundled karate club
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Recovery-rate axis `lo:hi:n[:log|:lin]` [default: 0.05:5:10:log]
    #[arg(long)]
    pub delta_range: Option<Axis>,
    /// Infection-rate axis `lo:hi:n[:log|:lin]` [default: 0.002:0.2:10:log]
    #[arg(long)]
    pub beta_range: Option<Axis>,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Runs per cell
    #[arg(long, default_value_t = DEFAULT_RUNS_PER_CELL)]
    pub runs: usize,
    /// Comma-separated labels infected at time zero [default: all nodes]
    #[arg(long)]
    pub initial: Option<String>,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// A parameter axis parsed from `lo:hi:n[:log|:lin]`; log spacing by default.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let (lo, hi, n, scale) = match parts.as_slice() {
            [lo, hi, n] => (lo, hi, n, "log"),
            [lo, hi, n, scale] => (lo, hi, n, *scale),
            _ => return Err(format!("expected lo:hi:n[:log|:lin], found '{s}'")),
        };
        let num = |x: &str| x.parse::<f64>().map_err(|e| format!("'{x}': {e}"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let n: usize = n.parse().map_err(|e| format!("'{n}': {e}"))?;
        let values = match scale {
            "log" => log_space(lo, hi, n),
            "lin" => lin_space(lo, hi, n),
            other => return Err(format!("unknown spacing '{other}', expected log or lin")),
        };
        values.map(Axis).map_err(|e| e.to_string())
    }
}

pub fn load_graph(spec: &str) -> Result<Graph> {
    if spec == BUILTIN_KARATE {
        return Ok(karate_club());
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_edge_list(&text).map_err(|e| CliError::Usage(format!("{spec}: {e}")))
}

/// Reads `label,delta,beta,gamma` lines; a leading `label,...` header and
/// `#` comments are skipped. Every node of `g` must appear exactly once.
pub fn load_params(path: &Path, g: &Graph) -> Result<ModelParams> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let n = g.num_nodes();
    let mut rates: Vec<Option<[f64; 3]>> = vec![None; n];
    let bad =
        |line: usize, msg: String| CliError::Usage(format!("{}:{line}: {msg}", path.display()));
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (k == 0 && line.starts_with("label")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad(
                k + 1,
                format!("expected label,delta,beta,gamma, found '{line}'"),
            ));
        }
        let i = g
            .index_of(fields[0])
            .ok_or_else(|| bad(k + 1, format!("unknown node '{}'", fields[0])))?;
        let mut v = [0.0; 3];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f
                .parse()
                .map_err(|_| bad(k + 1, format!("'{f}' is not a number")))?;
        }
        if rates[i].replace(v).is_some() {
            return Err(bad(k + 1, format!("node '{}' listed twice", fields[0])));
        }
    }
    if let Some(i) = rates.iter().position(Option::is_none) {
        return Err(CliError::Usage(format!(
            "{}: no rates for node '{}'",
            path.display(),
            g.label(i)
        )));
    }
    let rates: Vec<[f64; 3]> = rates.into_iter().flatten().collect();
    Ok(ModelParams::new(
        rates.iter().map(|r| r[0]).collect(),
        rates.iter().map(|r| r[1]).collect(),
        rates.iter().map(|r| r[2]).collect(),
    )?)
}

fn load_model(args: &ModelArgs, warn: &mut Vec<String>) -> Result<(Graph, ModelParams)> {
    let g = load_graph(&args.graph)?;
    let p = match (&args.params, args.delta, args.beta) {
        (Some(path), _, _) => load_params(path, &g)?,
        (None, Some(delta), Some(beta)) => {
            ModelParams::homogeneous(g.num_nodes(), beta, delta, args.gamma)?
        }
        _ => {
            return Err(CliError::Usage(
                "either --params or both --delta and --beta are required".into(),
            ))
        }
    };
    delta_warning(p.delta(), warn);
    Ok((g, p))
}

fn delta_warning(delta: &[f64], warn: &mut Vec<String>) {
    let zero = delta.iter().filter(|&&d| d == 0.0).count();
    if zero > 0 {
        warn.push(format!(
            "delta = 0 at {zero} node(s): infected nodes there never recover and the process cannot die out"
        ));
    }
}

fn parse_initial(g: &Graph, spec: Option<&str>) -> Result<Vec<usize>> {
    match spec {
        None => Ok((0..g.num_nodes()).collect()),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|label| {
                g.index_of(label)
                    .ok_or_else(|| CliError::Usage(format!("--initial: unknown node '{label}'")))
            })
            .collect(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key:<22}{value}");
}

pub fn cmd_bound(model: &ModelArgs, solver: &SolverArgs, warn: &mut Vec<String>) -> Result<String> {
    let (g, p) = load_model(model, warn)?;
    let m = build_moment_matrix(&g, &p)?;
    let lm = lambda_max_metzler(m.matrix(), solver.tol, solver.max_iter)?;
    let la = lambda_max_adjacency(&g, solver.tol, solver.max_iter)?;
    let conventional = rho_sis(&g, &p, solver.tol, solver.max_iter)?;

    let mut text = String::new();
    line(&mut text, "nodes", g.num_nodes());
    line(&mut text, "edges", g.num_edges());
    line(&mut text, "dimension", m.dim());
    line(&mut text, "nonzeros", m.nnz());
    line(&mut text, "lambda_max(M)", format_sig9(lm.lambda_max));
    line(&mut text, "  iterations", lm.iterations);
    line(&mut text, "  residual", format!("{:.2e}", lm.residual));
    line(&mut text, "lambda_max(A)", format_sig9(la.lambda_max));
    line(&mut text, "rho_sis", format_sig9(conventional.lambda_max));
    let verdict = if lm.lambda_max < 0.0 {
        "extinct by bound"
    } else {
        "inconclusive"
    };
    line(&mut text, "verdict", verdict);
    Ok(text)
}

pub fn cmd_simulate(
    model: &ModelArgs,
    sim: &SimArgs,
    out: Option<&Path>,
    warn: &mut Vec<String>,
) -> Result<String> {
    let (g, p) = load_model(model, warn)?;
    if sim.runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let config = SimConfig {
        reinfect: !sim.no_reinfect,
        initial_infected: parse_initial(&g, sim.initial.as_deref())?,
        record_events: out.is_some(),
        ..SimConfig::new(sim.horizon, sim.seed)
    };
    let results = run_ensemble(&g, &p, &config, sim.runs)?;
    if let Some(path) = out {
        let events = results[0].events.as_deref().unwrap_or_default();
        let mut w = create(path)?;
        write_event_log(&g, events, &mut w)
            .and_then(|_| w.flush())
            .map_err(io_err(path))?;
    }

    let mut text = String::new();
    line(&mut text, "nodes", g.num_nodes());
    line(&mut text, "horizon", sim.horizon);
    line(
        &mut text,
        "reinfection",
        if config.reinfect { "on" } else { "off" },
    );
    let _ = writeln!(
        text,
        "{:>5} {:>14} {:>14} {:>12} {:>12}",
        "run", "y(T)", "y*", "reinfections", "events"
    );
    for (r, res) in results.iter().enumerate() {
        let _ = writeln!(
            text,
            "{r:>5} {:>14} {:>14} {:>12} {:>12}",
            format_sig9(res.time_average),
            format_sig9(res.metastable),
            res.reinfection_count,
            res.event_count
        );
        if let Some(t) = res.extinction_time {
            let _ = writeln!(text, "{:>5} extinct at t = {}", "", format_sig9(t));
        }
    }
    let mean_y = results.iter().map(|r| r.time_average).sum::<f64>() / results.len() as f64;
    let mean_star = mean_y - 1.0;
    line(&mut text, "mean y(T)", format_sig9(mean_y));
    line(&mut text, "mean y*", format_sig9(mean_star));
    line(
        &mut text,
        "classification",
        if mean_star < 1.0 {
            "extinct"
        } else {
            "persistent"
        },
    );
    Ok(text)
}

pub fn cmd_exact(
    model: &ModelArgs,
    solver: &SolverArgs,
    cap: usize,
    warn: &mut Vec<String>,
) -> Result<String> {
    let (g, p) = load_model(model, warn)?;
    let exact = build_exact_with_cap(&g, &p, cap)?;
    let rho = exact_growth_rate(&exact)?;
    let m = build_moment_matrix(&g, &p)?;
    let lm = lambda_max_metzler(m.matrix(), solver.tol, solver.max_iter)?;
    let margin = lm.lambda_max - rho;

    let mut text = String::new();
    line(&mut text, "nodes", g.num_nodes());
    line(&mut text, "states", exact.num_states());
    line(&mut text, "rho_exact", format_sig9(rho));
    line(&mut text, "lambda_max(M)", format_sig9(lm.lambda_max));
    line(&mut text, "margin", format_sig9(margin));
    let slack = 10.0 * solver.tol * lm.lambda_max.abs().max(1.0);
    line(
        &mut text,
        "bound holds",
        if margin >= -slack { "yes" } else { "NO" },
    );
    Ok(text)
}

pub fn cmd_sweep(args: &SweepArgs, warn: &mut Vec<String>) -> Result<String> {
    let g = load_graph(&args.graph)?;
    let defaults = SweepGrid::default_grid(args.seed);
    let grid = SweepGrid {
        delta_values: args
            .delta_range
            .clone()
            .map_or(defaults.delta_values, |a| a.0),
        beta_values: args
            .beta_range
            .clone()
            .map_or(defaults.beta_values, |a| a.0),
        gamma: args.gamma,
        sim: SimConfig {
            initial_infected: match &args.initial {
                Some(list) => parse_initial(&g, Some(list))?,
                None => Vec::new(),
            },
            ..SimConfig::new(args.horizon, args.seed)
        },
        runs_per_cell: args.runs,
        tol: args.solver.tol,
        max_iter: args.solver.max_iter,
    };
    delta_warning(&grid.delta_values, warn);
    let cells = run_sweep(&g, &grid)?;
    let mut w = create(&args.out)?;
    write_csv(&cells, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&args.out))?;
    let summary = classify_boundaries(&cells)?;

    let mut text = String::new();
    line(&mut text, "nodes", g.num_nodes());
    line(&mut text, "cells", summary.cells);
    line(&mut text, "in E (simulated)", summary.in_e);
    line(&mut text, "in E_lower (moment)", summary.in_e_lower);
    line(&mut text, "in E_sis", summary.in_e_sis);
    line(&mut text, "E_lower outside E", summary.lower_outside_e);
    line(&mut text, "E_sis outside E", summary.sis_outside_e);
    let _ = writeln!(
        text,
        "largest extinct beta per delta (simulated / moment / sis):"
    );
    let show = |b: Option<f64>| b.map_or_else(|| "-".to_string(), format_sig9);
    for c in &summary.columns {
        let _ = writeln!(
            text,
            "  delta {:>12} {:>12} {:>12} {:>12}",
            format_sig9(c.delta),
            show(c.simulated),
            show(c.moment_bound),
            show(c.sis_bound)
        );
    }
    line(&mut text, "csv", args.out.display());
    Ok(text)
}

pub fn cmd_matrix(model: &ModelArgs, out: &Path, warn: &mut Vec<String>) -> Result<String> {
    let (g, p) = load_model(model, warn)?;
    let m = build_moment_matrix(&g, &p)?;
    let mut w = create(out)?;
    m.write_coordinate(&mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(out))?;
    let mut text = String::new();
    line(&mut text, "nodes", g.num_nodes());
    line(&mut text, "dimension", m.dim());
    line(&mut text, "nonzeros", m.nnz());
    line(&mut text, "written", out.display());
    Ok(text)
}

/// Runs the parsed command, inside a dedicated thread pool when `--threads`
/// is given.
pub fn run(cli: &Cli, warn: &mut Vec<String>) -> Result<String> {
    let mut dispatch = || match &cli.command {
        Command::Bound { model, solver } => cmd_bound(model, solver, warn),
        Command::Simulate { model, sim, out } => cmd_simulate(model, sim, out.as_deref(), warn),
        Command::Exact { model, solver, cap } => cmd_exact(model, solver, *cap, warn),
        Command::Sweep(args) => cmd_sweep(args, warn),
        Command::Matrix { model, out } => cmd_matrix(model, out, warn),
    };
    match cli.threads {
        None => dispatch(),
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(dispatch),
    }
}
