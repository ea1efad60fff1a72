use std::time::Instant;

use rand::Rng;

use super::config::{Algorithm, OutputPolicy, SolverConfig};
use super::trace::{Trace, TraceRecord};
use crate::error::Result;
use crate::estimators::{estimate_full, Estimator, EstimatorKind};
use crate::oracle::{smooth_value, ComponentOracle, CountingOracle};
use crate::prox::Regularizer;
use crate::rng::{DirectionTag, Purpose, RandomSource, StreamRng};
use crate::vector::{norm_sq, DenseVector};

/// Shared bookkeeping for the drivers: query ledgers, trace records, budget
/// checks and output-iterate selection.
pub(crate) struct Recorder<'a, O: ComponentOracle + ?Sized> {
    pub solver: CountingOracle<&'a O>,
    reporter: CountingOracle<&'a O>,
    reg: &'a Regularizer,
    cfg: &'a SolverConfig,
    algo: Algorithm,
    pub eta: f64,
    pub source: RandomSource,
    start: Instant,
    initial: TraceRecord,
    records: Vec<TraceRecord>,
    chosen: Option<DenseVector>,
    output_rng: StreamRng,
    produced: u64,
    /// Last iterate skipped by `record_every`, as `(iter, epoch)`.
    pending: Option<(u64, Option<u64>)>,
    truncated: bool,
}

impl<'a, O: ComponentOracle + ?Sized> Recorder<'a, O> {
    /// Validates the config and logs iteration 0 at the returned start point.
    pub fn start(
        algo: Algorithm,
        oracle: &'a O,
        reg: &'a Regularizer,
        cfg: &'a SolverConfig,
    ) -> Result<(Self, DenseVector)> {
        let (n, d) = (oracle.num_components(), oracle.dim());
        let eta = cfg.validate(algo, n, d)?;
        let source = RandomSource::new(cfg.seed);
        let x0 = cfg.x0.clone().unwrap_or_else(|| DenseVector::zeros(d));
        let mut rec = Recorder {
            solver: CountingOracle::new(oracle),
            reporter: CountingOracle::new(oracle),
            reg,
            cfg,
            algo,
            eta,
            source,
            start: Instant::now(),
            initial: placeholder(),
            records: Vec::new(),
            chosen: None,
            output_rng: source.stream(Purpose::Output, algo as u64, 0),
            produced: 0,
            pending: None,
            truncated: false,
        };
        rec.initial = rec.snapshot(0, None, &x0, true)?;
        rec.initial.elapsed_ns = 0;
        rec.start = Instant::now();
        Ok((rec, x0))
    }

    /// Batch-index generator for this run.
    pub fn batch_rng(&self) -> StreamRng {
        self.source.stream(Purpose::Batch, self.algo as u64, 0)
    }

    /// True (and marks the run truncated) once the budget is spent.
    pub fn out_of_budget(&mut self) -> bool {
        if let Some(b) = self.cfg.budget {
            if self.solver.queries() >= b {
                self.truncated = true;
            }
        }
        self.truncated
    }

    /// Logs the iterate produced by iteration `iter`.
    pub fn record(&mut self, iter: u64, epoch: Option<u64>, x: &[f64]) -> Result<()> {
        self.produced += 1;
        if self
            .produced
            .is_multiple_of(self.cfg.report.record_every.max(1) as u64)
        {
            self.push_record(iter, epoch, x)?;
            self.pending = None;
        } else {
            self.pending = Some((iter, epoch));
        }
        if self.cfg.output_policy == OutputPolicy::UniformRandomIterate
            && self.output_rng.random_range(0..self.produced) == 0
        {
            self.chosen = Some(DenseVector::from(x));
        }
        Ok(())
    }

    fn push_record(&mut self, iter: u64, epoch: Option<u64>, x: &[f64]) -> Result<()> {
        let every = self.cfg.report.grad_map_every;
        let with_grad = every > 0 && (self.records.len() + 1).is_multiple_of(every);
        let r = self.snapshot(iter, epoch, x, with_grad)?;
        self.records.push(r);
        Ok(())
    }

    fn snapshot(
        &self,
        iter: u64,
        epoch: Option<u64>,
        x: &[f64],
        with_grad: bool,
    ) -> Result<TraceRecord> {
        let objective = smooth_value(&self.reporter, x)? + self.reg.value(x);
        let grad_map_sq = if with_grad && self.cfg.report.grad_map_every > 0 {
            Some(self.grad_map_sq(x)?)
        } else {
            None
        };
        Ok(TraceRecord {
            iter,
            epoch,
            objective,
            test_loss: self.cfg.report.test_loss.as_ref().map(|f| f(x)),
            queries: self.solver.queries(),
            grad_map_sq,
            elapsed_ns: self.start.elapsed().as_nanos() as u64,
        })
    }

    fn grad_map_sq(&self, x: &[f64]) -> Result<f64> {
        let grad = match &self.cfg.report.gradient {
            Some(g) => g(x),
            None => {
                let est = Estimator::new(EstimatorKind::Coordinate, self.cfg.report.mu_report)
                    .with_exec(self.cfg.estimator.exec);
                let dirs = self.source.directions(DirectionTag::new(u64::MAX, 0));
                estimate_full(&self.reporter, x, &est, &dirs)?
            }
        };
        Ok(norm_sq(&self.reg.gradient_mapping(self.eta, x, &grad)?))
    }

    pub fn finish(mut self, last_x: DenseVector) -> Result<Trace> {
        if let Some((iter, epoch)) = self.pending.take() {
            self.push_record(iter, epoch, &last_x)?;
        }
        if self.cfg.report.grad_map_every > 0 {
            if let Some(last) = self.records.last() {
                if last.grad_map_sq.is_none() {
                    let g = self.grad_map_sq(&last_x)?;
                    self.records.last_mut().unwrap().grad_map_sq = Some(g);
                }
            }
        }
        let final_x = match self.cfg.output_policy {
            OutputPolicy::LastIterate => last_x.clone(),
            OutputPolicy::UniformRandomIterate => {
                self.chosen.take().unwrap_or_else(|| last_x.clone())
            }
        };
        Ok(Trace {
            algorithm: self.algo,
            estimator: self.cfg.estimator.kind,
            eta: self.eta,
            batch: match self.algo {
                Algorithm::ProxGd => self.solver.num_components(),
                _ => self.cfg.batch,
            },
            initial: self.initial,
            records: self.records,
            final_x,
            last_x,
            total_queries: self.solver.queries(),
            report_queries: self.reporter.queries(),
            truncated: self.truncated,
        })
    }
}

fn placeholder() -> TraceRecord {
    TraceRecord {
        iter: 0,
        epoch: None,
        objective: 0.0,
        test_loss: None,
        queries: 0,
        grad_map_sq: None,
        elapsed_ns: 0,
    }
}
