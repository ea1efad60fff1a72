use std::io;

use thiserror::Error;

pub type Result<T, E = ZoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ZoError {
    /// An oracle returned NaN or an infinity. `coordinate` is set when the
    /// value came from a perturbed point along that axis.
    #[error("non-finite value from component {component}{}", fmt_coord(.coordinate))]
    NonFiniteValue {
        component: usize,
        coordinate: Option<usize>,
    },

    #[error("invalid mini-batch: b = {batch} with n = {n}")]
    InvalidBatch { batch: usize, n: usize },

    #[error("step size must be positive, got {0}")]
    InvalidStep(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("oracle unavailable for example {component}: {reason}")]
    OracleUnavailable { component: usize, reason: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported label set: {0}")]
    Label(String),

    #[error("cannot split dataset: {0}")]
    Split(String),

    #[error("at iteration {iter}: {source}")]
    AtIteration {
        iter: u64,
        #[source]
        source: Box<ZoError>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

fn fmt_coord(c: &Option<usize>) -> String {
    match c {
        Some(j) => format!(" at coordinate {j}"),
        None => String::new(),
    }
}

impl ZoError {
    pub(crate) fn at_iteration(self, iter: u64) -> Self {
        match self {
            e @ ZoError::AtIteration { .. } => e,
            e => ZoError::AtIteration {
                iter,
                source: Box::new(e),
            },
        }
    }

    /// Strips iteration context, if any.
    pub fn root(&self) -> &ZoError {
        match self {
            ZoError::AtIteration { source, .. } => source.root(),
            e => e,
        }
    }
}
