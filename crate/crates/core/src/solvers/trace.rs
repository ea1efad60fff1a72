use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use crate::estimators::EstimatorKind;
use crate::vector::DenseVector;

/// Column order of [`Trace::write_csv`].
pub const CSV_HEADER: &str = "iter,epoch,objective,test_loss,queries,grad_map_sq,elapsed_ns";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: u64,
    /// 1-based epoch, SVRG only.
    pub epoch: Option<u64>,
    pub objective: f64,
    pub test_loss: Option<f64>,
    /// Cumulative solver queries after this iteration.
    pub queries: u64,
    pub grad_map_sq: Option<f64>,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trace {
    pub algorithm: Algorithm,
    pub estimator: EstimatorKind,
    pub eta: f64,
    pub batch: usize,
    /// State at `x_0` before any work (iteration 0, zero queries).
    pub initial: TraceRecord,
    /// One record per iteration, or per `record_every` iterations plus the last.
    pub records: Vec<TraceRecord>,
    /// The output iterate selected by the output policy.
    pub final_x: DenseVector,
    /// The iterate the run stopped at.
    pub last_x: DenseVector,
    pub total_queries: u64,
    /// Queries spent on reporting (objective, `g_η`), kept off the ledger.
    pub report_queries: u64,
    /// The query budget stopped the run early.
    pub truncated: bool,
}

impl Trace {
    pub fn final_objective(&self) -> f64 {
        self.records.last().unwrap_or(&self.initial).objective
    }

    pub fn final_test_loss(&self) -> Option<f64> {
        self.records.last().unwrap_or(&self.initial).test_loss
    }

    pub fn elapsed_ns(&self) -> u64 {
        self.records.last().map_or(0, |r| r.elapsed_ns)
    }

    /// Smallest logged `‖g_η‖²`.
    pub fn min_grad_map_sq(&self) -> Option<f64> {
        std::iter::once(&self.initial)
            .chain(&self.records)
            .filter_map(|r| r.grad_map_sq)
            .reduce(f64::min)
    }

    /// Equality of everything except wall-clock fields.
    pub fn same_trajectory(&self, other: &Trace) -> bool {
        let strip = |t: &Trace| {
            std::iter::once(&t.initial)
                .chain(&t.records)
                .map(|r| TraceRecord {
                    elapsed_ns: 0,
                    ..r.clone()
                })
                .collect::<Vec<_>>()
        };
        strip(self) == strip(other)
            && self.final_x == other.final_x
            && self.last_x == other.last_x
            && self.total_queries == other.total_queries
            && self.truncated == other.truncated
    }

    /// Writes the initial row followed by one row per record. Empty optional
    /// fields are left blank. With `timing == false`, `elapsed_ns` is written
    /// as 0 so output is reproducible byte for byte.
    pub fn write_csv<W: Write>(&self, mut w: W, timing: bool) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in std::iter::once(&self.initial).chain(&self.records) {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.iter,
                opt(r.epoch),
                r.objective,
                opt(r.test_loss),
                r.queries,
                opt(r.grad_map_sq),
                if timing { r.elapsed_ns } else { 0 }
            )?;
        }
        Ok(())
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}
