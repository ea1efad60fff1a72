use super::config::{Algorithm, SolverConfig};
use super::phase;
use super::recorder::Recorder;
use super::trace::Trace;
use crate::error::Result;
use crate::oracle::ComponentOracle;
use crate::prox::Regularizer;
use crate::rng::{sample_minibatch, DirectionTag};
use crate::vector::{max_abs, mean_of, DenseVector};

/// Stored per-component estimates and their running mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SagaState {
    /// Row `i` holds `∇̂f_i(z_i)`, the estimate at the point where component
    /// `i` was last refreshed.
    pub grad_table: Vec<DenseVector>,
    /// Incrementally maintained mean of `grad_table`.
    pub phi_hat: DenseVector,
    pub x: DenseVector,
}

impl SagaState {
    /// Row mean recomputed from scratch.
    pub fn table_mean(&self) -> DenseVector {
        mean_of(&self.grad_table, self.phi_hat.dim())
    }

    pub fn table_max_abs(&self) -> f64 {
        self.grad_table
            .iter()
            .map(|r| max_abs(r))
            .fold(0.0, f64::max)
    }

    /// `‖φ̂ − rowmean(table)‖_∞`
    pub fn mean_drift(&self) -> f64 {
        let exact = self.table_mean();
        self.phi_hat
            .iter()
            .zip(exact.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// SAGA mixture gradient `v = (1/b) Σ_k (fresh_k − table[i_k]) + φ̂` for
/// precomputed fresh estimates, one per batch entry.
pub fn saga_mixture_gradient(
    batch: &[usize],
    fresh: &[DenseVector],
    table: &[DenseVector],
    phi_hat: &[f64],
) -> DenseVector {
    let mut sum = DenseVector::zeros(phi_hat.len());
    for (k, &i) in batch.iter().enumerate() {
        for ((s, f), z) in sum.iter_mut().zip(fresh[k].iter()).zip(table[i].iter()) {
            *s += f - z;
        }
    }
    let inv_b = 1.0 / batch.len() as f64;
    sum.iter()
        .zip(phi_hat)
        .map(|(s, p)| s * inv_b + p)
        .collect()
}

/// ZO-ProxSAGA: initializes the gradient table at `x_0` (one full pass),
/// then runs `T` proximal steps on a with-replacement mini-batch, refreshing
/// the table rows of the drawn components.
///
/// Solver queries: `q·n + T·q·b` with `q` the per-component cost. Table reads
/// are free.
pub fn zo_prox_saga<O: ComponentOracle + ?Sized>(
    oracle: &O,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<Trace> {
    zo_prox_saga_with_state(oracle, reg, cfg).map(|(trace, _)| trace)
}

/// [`zo_prox_saga`] that also returns the final table state.
pub fn zo_prox_saga_with_state<O: ComponentOracle + ?Sized>(
    oracle: &O,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<(Trace, SagaState)> {
    let (mut rec, x0) = Recorder::start(Algorithm::ProxSaga, oracle, reg, cfg)?;
    let (n, d) = (oracle.num_components(), x0.dim());
    let mut batch_rng = rec.batch_rng();

    let all: Vec<usize> = (0..n).collect();
    let init_dirs = rec
        .source
        .directions(DirectionTag::new(phase::TABLE_INIT, 0));
    let grad_table = cfg
        .estimator
        .at(1, d)
        .components(&rec.solver, &all, &x0, &init_dirs)
        .map_err(|e| e.at_iteration(1))?;
    let phi_hat = mean_of(&grad_table, d);
    let mut state = SagaState {
        grad_table,
        phi_hat,
        x: x0,
    };
    let inv_n = 1.0 / n as f64;

    for t in 1..=cfg.total_iters as u64 {
        if rec.out_of_budget() {
            break;
        }
        let mut step = || -> Result<()> {
            let batch = sample_minibatch(&mut batch_rng, n, cfg.batch, true)?;
            let est = cfg.estimator.at(t, d);
            let dirs = rec.source.directions(DirectionTag::new(phase::STEP, t));
            let fresh = est.components(&rec.solver, &batch, &state.x, &dirs)?;
            let v = saga_mixture_gradient(&batch, &fresh, &state.grad_table, &state.phi_hat);
            state.x.axpy(-rec.eta, &v);
            reg.prox_in_place(rec.eta, &mut state.x)?;
            // Rows are refreshed in draw order; a repeated index replaces the
            // row written by its earlier occurrence.
            for (k, &i) in batch.iter().enumerate() {
                let row = &mut state.grad_table[i];
                for ((p, f), z) in state
                    .phi_hat
                    .iter_mut()
                    .zip(fresh[k].iter())
                    .zip(row.iter())
                {
                    *p += (f - z) * inv_n;
                }
                row.clone_from(&fresh[k]);
            }
            Ok(())
        };
        step().map_err(|e| e.at_iteration(t))?;
        rec.record(t, None, &state.x)
            .map_err(|e| e.at_iteration(t))?;
    }
    let trace = rec.finish(state.x.clone())?;
    Ok((trace, state))
}
