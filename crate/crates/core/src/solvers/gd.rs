use super::config::{Algorithm, SolverConfig};
use super::phase;
use super::recorder::Recorder;
use super::trace::Trace;
use crate::error::Result;
use crate::estimators::{estimate_full, estimate_minibatch};
use crate::oracle::ComponentOracle;
use crate::prox::Regularizer;
use crate::rng::{sample_minibatch, DirectionTag};

/// Zeroth-order proximal gradient descent: `T` steps of
/// `x ← prox_ηψ(x − η ∇̂f(x))` with the full `n`-component estimate.
pub fn zo_prox_gd<O: ComponentOracle + ?Sized>(
    oracle: &O,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<Trace> {
    let (mut rec, mut x) = Recorder::start(Algorithm::ProxGd, oracle, reg, cfg)?;
    let d = x.dim();
    for t in 1..=cfg.total_iters as u64 {
        if rec.out_of_budget() {
            break;
        }
        let mut step = || -> Result<()> {
            let est = cfg.estimator.at(t, d);
            let dirs = rec.source.directions(DirectionTag::new(phase::STEP, t));
            let g = estimate_full(&rec.solver, &x, &est, &dirs)?;
            x.axpy(-rec.eta, &g);
            reg.prox_in_place(rec.eta, &mut x)
        };
        step().map_err(|e| e.at_iteration(t))?;
        rec.record(t, None, &x).map_err(|e| e.at_iteration(t))?;
    }
    rec.finish(x)
}

/// RSPGF (zeroth-order proximal SGD): `T` steps using a mini-batch of `b`
/// components drawn without replacement.
///
/// Directions are addressed exactly as in [`zo_prox_gd`], so with `b = n`
/// both drivers follow the same trajectory.
pub fn rspgf<O: ComponentOracle + ?Sized>(
    oracle: &O,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<Trace> {
    let (mut rec, mut x) = Recorder::start(Algorithm::Rspgf, oracle, reg, cfg)?;
    let (n, d) = (oracle.num_components(), x.dim());
    let mut batch_rng = rec.batch_rng();
    for t in 1..=cfg.total_iters as u64 {
        if rec.out_of_budget() {
            break;
        }
        let mut step = || -> Result<()> {
            let batch = sample_minibatch(&mut batch_rng, n, cfg.batch, false)?;
            let est = cfg.estimator.at(t, d);
            let dirs = rec.source.directions(DirectionTag::new(phase::STEP, t));
            let g = estimate_minibatch(&rec.solver, &batch, &x, &est, &dirs)?;
            x.axpy(-rec.eta, &g);
            reg.prox_in_place(rec.eta, &mut x)
        };
        step().map_err(|e| e.at_iteration(t))?;
        rec.record(t, None, &x).map_err(|e| e.at_iteration(t))?;
    }
    rec.finish(x)
}
