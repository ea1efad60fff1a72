use super::config::{Algorithm, SolverConfig};
use super::phase;
use super::recorder::Recorder;
use super::trace::Trace;
use crate::error::Result;
use crate::estimators::{estimate_full, estimate_minibatch, Estimator};
use crate::oracle::ComponentOracle;
use crate::prox::Regularizer;
use crate::rng::{sample_minibatch, DirectionTag, Directions};
use crate::vector::DenseVector;

/// Mixture gradient `v = ∇̂f_I(x) − ∇̂f_I(x̃) + ∇̂f(x̃)`.
///
/// `dirs_x` and `dirs_snapshot` drive the two mini-batch terms; passing the
/// same directions correlates the pair so it cancels at `x = x̃`. Costs two
/// mini-batch estimates.
#[allow(clippy::too_many_arguments)]
pub fn svrg_mixture_gradient<O: ComponentOracle + ?Sized>(
    oracle: &O,
    batch: &[usize],
    x: &[f64],
    snapshot: &[f64],
    snapshot_grad: &[f64],
    est: &Estimator,
    dirs_x: &Directions,
    dirs_snapshot: &Directions,
) -> Result<DenseVector> {
    let at_x = estimate_minibatch(oracle, batch, x, est, dirs_x)?;
    let at_snap = estimate_minibatch(oracle, batch, snapshot, est, dirs_snapshot)?;
    Ok(at_x
        .iter()
        .zip(at_snap.iter())
        .zip(snapshot_grad)
        .map(|((a, b), g)| (a - b) + g)
        .collect())
}

/// ZO-ProxSVRG: `S` epochs, each taking a full estimate at the snapshot
/// `x̃` and then `m` proximal steps along the mixture gradient. Mini-batches
/// are drawn without replacement; the next snapshot is the last inner
/// iterate.
///
/// Solver queries: `S·(q·n + 2·q·b·m)` with `q` the per-component cost.
pub fn zo_prox_svrg<O: ComponentOracle + ?Sized>(
    oracle: &O,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<Trace> {
    let (mut rec, mut x) = Recorder::start(Algorithm::ProxSvrg, oracle, reg, cfg)?;
    let (n, d) = (oracle.num_components(), x.dim());
    let mut batch_rng = rec.batch_rng();
    let mut t = 0u64;
    'epochs: for s in 1..=cfg.epochs as u64 {
        if rec.out_of_budget() {
            break;
        }
        let snapshot = x.clone();
        let snap_est = cfg.estimator.at(t + 1, d);
        let snap_dirs = rec.source.directions(DirectionTag::new(phase::SNAPSHOT, s));
        let snapshot_grad = estimate_full(&rec.solver, &snapshot, &snap_est, &snap_dirs)
            .map_err(|e| e.at_iteration(t + 1))?;
        for _ in 0..cfg.inner {
            if rec.out_of_budget() {
                break 'epochs;
            }
            t += 1;
            let mut step = || -> Result<()> {
                let batch = sample_minibatch(&mut batch_rng, n, cfg.batch, false)?;
                let est = cfg.estimator.at(t, d);
                let dirs_x = rec.source.directions(DirectionTag::new(phase::STEP, t));
                let dirs_snap = if cfg.estimator.shared_directions {
                    dirs_x
                } else {
                    rec.source
                        .directions(DirectionTag::new(phase::SNAPSHOT_PAIR, t))
                };
                let v = svrg_mixture_gradient(
                    &rec.solver,
                    &batch,
                    &x,
                    &snapshot,
                    &snapshot_grad,
                    &est,
                    &dirs_x,
                    &dirs_snap,
                )?;
                x.axpy(-rec.eta, &v);
                reg.prox_in_place(rec.eta, &mut x)
            };
            step().map_err(|e| e.at_iteration(t))?;
            rec.record(t, Some(s), &x).map_err(|e| e.at_iteration(t))?;
        }
    }
    rec.finish(x)
}
