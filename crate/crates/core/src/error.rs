use thiserror::Error;

/// Errors produced by graph ingestion, model validation and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on node '{label}'")]
    SelfLoop { line: usize, label: String },

    #[error("edge list contains no edges")]
    EmptyInput,

    #[error("node index {index} out of range for a graph with {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("matrix is not Metzler: entry ({row}, {col}) = {value}")]
    NotMetzler { row: usize, col: usize, value: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last estimate {estimate}, residual {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("dense eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("state space of {n} nodes (2^{n} states) exceeds the cap of {cap} nodes")]
    StateSpaceTooLarge { n: usize, cap: usize },

    #[error("master equation integration failed: {0}")]
    Integrator(String),

    #[error("sweep grid is incomplete: {0}")]
    IncompleteGrid(String),

    #[error("sweep cell (delta = {delta}, beta = {beta}): {source}")]
    Cell {
        delta: f64,
        beta: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::Eigensolver(_) | Error::Integrator(_) => true,
            Error::Cell { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
