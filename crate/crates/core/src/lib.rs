//! Zeroth-order proximal stochastic optimization.
//!
//! Solvers for composite problems `min_x (1/n) Σ f_i(x) + ψ(x)` where the
//! smooth components `f_i` are only reachable through a value oracle and `ψ`
//! is a convex regularizer with a closed-form proximal map.
//!
//! The crate provides two zeroth-order gradient estimators (coordinate-wise
//! central differences and Gaussian random directions), four drivers
//! (`zo_prox_gd`, `rspgf`, `zo_prox_svrg`, `zo_prox_saga`), built-in problem
//! instances and a LIBSVM reader.
//!
//! With the default `parallel` feature, per-component gradient estimates fan
//! out over a rayon pool. Results are bit-identical to the sequential path:
//! every random direction is drawn from its own counter-addressed stream and
//! reductions always run in index order.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod data;
pub mod error;
pub mod estimators;
pub mod oracle;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod solvers;
pub mod vector;

pub use error::{Result, ZoError};
pub use estimators::{EstimatorConfig, EstimatorKind, Exec, MuSchedule, MU_FLOOR};
pub use oracle::{full_function_value, ComponentOracle, CountingOracle, PurityCheckedOracle};
pub use prox::Regularizer;
pub use rng::RandomSource;
pub use solvers::{
    recipe_hyperparams, rspgf, zo_prox_gd, zo_prox_saga, zo_prox_svrg, Algorithm, OutputPolicy,
    Recipe, Reporting, SolverConfig, Trace, TraceRecord,
};
pub use vector::DenseVector;
