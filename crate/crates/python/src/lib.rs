//! Python module `synsis`. Heavy calls release the interpreter lock.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use synsis::exact::{build_exact_with_cap, DEFAULT_NODE_CAP};
use synsis::sim::{SimConfig, DEFAULT_HORIZON};
use synsis::spectral::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use synsis::sweep::{DEFAULT_GAMMA, DEFAULT_RUNS_PER_CELL};

fn to_py(e: synsis::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

#[pyclass(frozen, module = "synsis")]
struct Graph {
    inner: synsis::Graph,
}

#[pymethods]
impl Graph {
    /// Nodes `0..n` joined by the given index pairs.
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let inner = synsis::Graph::from_edges(n, &edges).map_err(to_py)?;
        Ok(Graph { inner })
    }

    /// Parses whitespace-separated label pairs, one edge per line.
    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        let inner = synsis::parse_edge_list(text).map_err(to_py)?;
        Ok(Graph { inner })
    }

    #[staticmethod]
    fn karate() -> Self {
        Graph {
            inner: synsis::karate_club(),
        }
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        self.inner.check_node(i).map_err(to_py)?;
        Ok(self.inner.neighbors(i).to_vec())
    }

    fn index_of(&self, label: &str) -> Option<usize> {
        self.inner.index_of(label)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={})",
            self.inner.num_nodes(),
            self.inner.num_edges()
        )
    }
}

#[pyclass(frozen, module = "synsis")]
struct ModelParams {
    inner: synsis::ModelParams,
}

#[pymethods]
impl ModelParams {
    #[new]
    fn new(delta: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>) -> PyResult<Self> {
        let inner = synsis::ModelParams::new(delta, beta, gamma).map_err(to_py)?;
        Ok(ModelParams { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, beta, delta, gamma = DEFAULT_GAMMA))]
    fn homogeneous(n: usize, beta: f64, delta: f64, gamma: f64) -> PyResult<Self> {
        let inner = synsis::ModelParams::homogeneous(n, beta, delta, gamma).map_err(to_py)?;
        Ok(ModelParams { inner })
    }

    #[getter]
    fn delta(&self) -> Vec<f64> {
        self.inner.delta().to_vec()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.beta().to_vec()
    }

    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.inner.gamma().to_vec()
    }
}

#[pyclass(frozen, get_all, module = "synsis")]
struct SpectralResult {
    lambda_max: f64,
    iterations: usize,
    residual: f64,
}

impl From<synsis::SpectralResult> for SpectralResult {
    fn from(r: synsis::SpectralResult) -> Self {
        SpectralResult {
            lambda_max: r.lambda_max,
            iterations: r.iterations,
            residual: r.residual,
        }
    }
}

#[pymethods]
impl SpectralResult {
    fn __repr__(&self) -> String {
        format!(
            "SpectralResult(lambda_max={}, iterations={}, residual={:e})",
            self.lambda_max, self.iterations, self.residual
        )
    }
}

#[pyclass(frozen, get_all, module = "synsis")]
struct SimResult {
    time_average: f64,
    metastable: f64,
    reinfection_count: u64,
    event_count: u64,
    extinction_time: Option<f64>,
    final_infected: Vec<usize>,
}

#[pymethods]
impl SimResult {
    fn is_extinct(&self) -> bool {
        self.metastable < 1.0
    }

    fn __repr__(&self) -> String {
        format!(
            "SimResult(time_average={}, metastable={}, reinfections={})",
            self.time_average, self.metastable, self.reinfection_count
        )
    }
}

#[pyclass(frozen, get_all, module = "synsis")]
struct SweepCell {
    delta: f64,
    beta: f64,
    y_star: f64,
    lambda_m: f64,
    rho_sis: f64,
    in_e: bool,
    in_e_lower: bool,
    in_e_sis: bool,
}

/// Largest real eigenvalue of the moment matrix.
#[pyfunction]
#[pyo3(signature = (graph, params, tol = DEFAULT_TOL, max_iter = DEFAULT_MAX_ITER))]
fn lambda_max_moment(
    py: Python<'_>,
    graph: &Graph,
    params: &ModelParams,
    tol: f64,
    max_iter: usize,
) -> PyResult<SpectralResult> {
    py.detach(|| {
        let m = synsis::build_moment_matrix(&graph.inner, &params.inner)?;
        synsis::lambda_max_metzler(m.matrix(), tol, max_iter)
    })
    .map(Into::into)
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (graph, tol = DEFAULT_TOL, max_iter = DEFAULT_MAX_ITER))]
fn lambda_max_adjacency(
    py: Python<'_>,
    graph: &Graph,
    tol: f64,
    max_iter: usize,
) -> PyResult<SpectralResult> {
    py.detach(|| synsis::lambda_max_adjacency(&graph.inner, tol, max_iter))
        .map(Into::into)
        .map_err(to_py)
}

/// Conventional bound `lambda_max(diag(beta) A - diag(delta))`.
#[pyfunction]
#[pyo3(signature = (graph, params, tol = DEFAULT_TOL, max_iter = DEFAULT_MAX_ITER))]
fn rho_sis(
    py: Python<'_>,
    graph: &Graph,
    params: &ModelParams,
    tol: f64,
    max_iter: usize,
) -> PyResult<SpectralResult> {
    py.detach(|| synsis::rho_sis(&graph.inner, &params.inner, tol, max_iter))
        .map(Into::into)
        .map_err(to_py)
}

type Triplets = Vec<(usize, usize, f64)>;

/// Dimension and nonzero entries of the moment matrix as `(row, col, value)`.
#[pyfunction]
fn moment_matrix(graph: &Graph, params: &ModelParams) -> PyResult<(usize, Triplets)> {
    let m = synsis::build_moment_matrix(&graph.inner, &params.inner).map_err(to_py)?;
    Ok((m.dim(), m.entries().collect()))
}

/// Independent runs seeded from `seed`; `initial` defaults to all nodes.
#[pyfunction]
#[pyo3(signature = (graph, params, horizon = DEFAULT_HORIZON, seed = 0, runs = 1, reinfect = true, initial = None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    graph: &Graph,
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    runs: usize,
    reinfect: bool,
    initial: Option<Vec<usize>>,
) -> PyResult<Vec<SimResult>> {
    let n = graph.inner.num_nodes();
    let config = SimConfig {
        reinfect,
        initial_infected: initial.unwrap_or_else(|| (0..n).collect()),
        ..SimConfig::new(horizon, seed)
    };
    let results = py
        .detach(|| synsis::run_ensemble(&graph.inner, &params.inner, &config, runs))
        .map_err(to_py)?;
    Ok(results
        .into_iter()
        .map(|r| SimResult {
            time_average: r.time_average,
            metastable: r.metastable,
            reinfection_count: r.reinfection_count,
            event_count: r.event_count,
            extinction_time: r.extinction_time,
            final_infected: r.final_state.infected_nodes().collect(),
        })
        .collect())
}

/// Growth rate of the exact `2^N`-state chain.
#[pyfunction]
#[pyo3(signature = (graph, params, cap = DEFAULT_NODE_CAP))]
fn exact_growth_rate(
    py: Python<'_>,
    graph: &Graph,
    params: &ModelParams,
    cap: usize,
) -> PyResult<f64> {
    py.detach(|| {
        let m = build_exact_with_cap(&graph.inner, &params.inner, cap)?;
        synsis::exact::exact_growth_rate(&m)
    })
    .map_err(to_py)
}

/// Cells in row-major order, delta outer.
#[pyfunction]
#[pyo3(signature = (
    graph, delta_values, beta_values, gamma = DEFAULT_GAMMA, horizon = DEFAULT_HORIZON, seed = 0,
    runs_per_cell = DEFAULT_RUNS_PER_CELL
))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    graph: &Graph,
    delta_values: Vec<f64>,
    beta_values: Vec<f64>,
    gamma: f64,
    horizon: f64,
    seed: u64,
    runs_per_cell: usize,
) -> PyResult<Vec<SweepCell>> {
    let grid = synsis::SweepGrid {
        delta_values,
        beta_values,
        gamma,
        sim: SimConfig::new(horizon, seed),
        runs_per_cell,
        ..synsis::SweepGrid::default_grid(seed)
    };
    let cells = py
        .detach(|| synsis::run_sweep(&graph.inner, &grid))
        .map_err(to_py)?;
    Ok(cells
        .into_iter()
        .map(|c| SweepCell {
            delta: c.delta,
            beta: c.beta,
            y_star: c.y_star,
            lambda_m: c.lambda_m,
            rho_sis: c.rho_sis,
            in_e: c.in_e,
            in_e_lower: c.in_e_lower,
            in_e_sis: c.in_e_sis,
        })
        .collect())
}

#[pymodule]
#[pyo3(name = "synsis")]
fn synsis_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<ModelParams>()?;
    m.add_class::<SpectralResult>()?;
    m.add_class::<SimResult>()?;
    m.add_class::<SweepCell>()?;
    m.add_function(wrap_pyfunction!(lambda_max_moment, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_max_adjacency, m)?)?;
    m.add_function(wrap_pyfunction!(rho_sis, m)?)?;
    m.add_function(wrap_pyfunction!(moment_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_growth_rate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
