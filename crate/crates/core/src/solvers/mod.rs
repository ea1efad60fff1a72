//! Proximal zeroth-order drivers.
//!
//! Every driver runs single-threaded; only the gradient estimation inside a
//! step fans out (see [`Exec`](crate::estimators::Exec)). Solver queries are
//! counted on their own ledger; objective, test loss and gradient-mapping
//! reporting go through a second counter so budgets compare solver work only.

mod config;
mod gd;
mod recorder;
mod saga;
mod svrg;
mod trace;

pub use config::{recipe_hyperparams, Algorithm, OutputPolicy, Recipe, Reporting, SolverConfig};
pub use gd::{rspgf, zo_prox_gd};
pub use saga::{saga_mixture_gradient, zo_prox_saga, zo_prox_saga_with_state, SagaState};
pub use svrg::{svrg_mixture_gradient, zo_prox_svrg};
pub use trace::{Trace, TraceRecord, CSV_HEADER};

/// Direction-stream phases. Two estimates share Gaussian directions exactly
/// when they use the same `(phase, step)` tag.
pub(crate) mod phase {
    pub const STEP: u64 = 0;
    pub const SNAPSHOT: u64 = 1;
    pub const SNAPSHOT_PAIR: u64 = 2;
    pub const TABLE_INIT: u64 = 3;
}
