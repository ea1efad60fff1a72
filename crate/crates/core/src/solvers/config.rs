use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::estimators::{EstimatorConfig, EstimatorKind, MuSchedule, MU_FLOOR};
use crate::vector::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ZO-ProxGD")]
    ProxGd,
    #[serde(rename = "RSPGF")]
    Rspgf,
    #[serde(rename = "ZO-ProxSVRG")]
    ProxSvrg,
    #[serde(rename = "ZO-ProxSAGA")]
    ProxSaga,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::ProxGd,
        Algorithm::Rspgf,
        Algorithm::ProxSvrg,
        Algorithm::ProxSaga,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ProxGd => "ZO-ProxGD",
            Algorithm::Rspgf => "RSPGF",
            Algorithm::ProxSvrg => "ZO-ProxSVRG",
            Algorithm::ProxSaga => "ZO-ProxSAGA",
        }
    }

    /// Short lowercase name, used in file names and on the command line.
    pub fn slug(self) -> &'static str {
        match self {
            Algorithm::ProxGd => "gd",
            Algorithm::Rspgf => "rspgf",
            Algorithm::ProxSvrg => "svrg",
            Algorithm::ProxSaga => "saga",
        }
    }

    /// `ρ` for the step size `η = ρ/(dL)` (CooSGE) or `η = ρ/L` (GauSGE).
    ///
    /// The variance-reduced values come from the convergence theorems. The
    /// two baselines have no such theorem here; they use the classic
    /// proximal-gradient `1/(2L)` scaled like the other recipes.
    pub fn recipe_rho(self, kind: EstimatorKind) -> f64 {
        match (self, kind) {
            (Algorithm::ProxSvrg, EstimatorKind::Coordinate) => 1.0 / 4.0,
            (Algorithm::ProxSvrg, EstimatorKind::Gaussian) => 1.0 / 6.0,
            (Algorithm::ProxSaga, EstimatorKind::Coordinate) => 1.0 / 8.0,
            (Algorithm::ProxSaga, EstimatorKind::Gaussian) => 1.0 / 12.0,
            (Algorithm::ProxGd | Algorithm::Rspgf, _) => 1.0 / 4.0,
        }
    }

    fn samples_without_replacement(self) -> bool {
        matches!(self, Algorithm::Rspgf | Algorithm::ProxSvrg)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ZoError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" | "zo-proxgd" | "proxgd" => Ok(Algorithm::ProxGd),
            "rspgf" | "sgd" | "zo-proxsgd" => Ok(Algorithm::Rspgf),
            "svrg" | "zo-proxsvrg" | "proxsvrg" => Ok(Algorithm::ProxSvrg),
            "saga" | "zo-proxsaga" | "proxsaga" => Ok(Algorithm::ProxSaga),
            _ => Err(ZoError::InvalidConfig(format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OutputPolicy {
    #[default]
    LastIterate,
    /// One of the produced iterates `x_1 … x_T`, uniformly at random.
    UniformRandomIterate,
}

pub type GradientFn = Arc<dyn Fn(&[f64]) -> DenseVector + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// What gets logged besides the objective. None of it counts toward the
/// solver's query ledger.
#[derive(Clone)]
pub struct Reporting {
    /// Keep a record every k-th iteration (the last iterate is always
    /// recorded). 1 records every iteration.
    pub record_every: usize,
    /// Compute `‖g_η‖²` on every k-th record (and the last one); 0 disables.
    pub grad_map_every: usize,
    /// Exact `∇f`, when the problem has one. Otherwise `g_η` uses a full
    /// CooSGE estimate with smoothing `mu_report`.
    pub gradient: Option<GradientFn>,
    pub mu_report: f64,
    pub test_loss: Option<ScalarFn>,
}

impl Default for Reporting {
    fn default() -> Self {
        Reporting {
            record_every: 1,
            grad_map_every: 10,
            gradient: None,
            mu_report: 1e-6,
            test_loss: None,
        }
    }
}

impl Reporting {
    pub fn objective_only() -> Self {
        Reporting {
            grad_map_every: 0,
            ..Reporting::default()
        }
    }

    pub fn with_gradient(mut self, g: GradientFn) -> Self {
        self.gradient = Some(g);
        self
    }

    pub fn with_test_loss(mut self, f: ScalarFn) -> Self {
        self.test_loss = Some(f);
        self
    }

    pub fn every(mut self, k: usize) -> Self {
        self.grad_map_every = k;
        self
    }

    pub fn record_every(mut self, k: usize) -> Self {
        self.record_every = k.max(1);
        self
    }
}

impl fmt::Debug for Reporting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reporting")
            .field("record_every", &self.record_every)
            .field("grad_map_every", &self.grad_map_every)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("mu_report", &self.mu_report)
            .field("test_loss", &self.test_loss.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub eta: f64,
    pub batch: usize,
    /// Outer loops `S` (SVRG).
    pub epochs: usize,
    /// Inner loop length `m` (SVRG).
    pub inner: usize,
    /// Iterations `T` (GD, RSPGF, SAGA).
    pub total_iters: usize,
    pub estimator: EstimatorConfig,
    pub seed: u64,
    pub output_policy: OutputPolicy,
    /// When set, `η` is derived from `ρ` and `lipschitz` and `eta` is ignored.
    pub rho: Option<f64>,
    pub lipschitz: Option<f64>,
    /// Starting point; zeros when absent.
    pub x0: Option<DenseVector>,
    /// Stop before the next iteration once this many solver queries are spent.
    pub budget: Option<u64>,
    pub report: Reporting,
}

impl SolverConfig {
    pub fn new(kind: EstimatorKind) -> Self {
        SolverConfig {
            eta: 0.1,
            batch: 1,
            epochs: 1,
            inner: 1,
            total_iters: 1,
            estimator: EstimatorConfig::new(kind),
            seed: 0,
            output_policy: OutputPolicy::LastIterate,
            rho: None,
            lipschitz: None,
            x0: None,
            budget: None,
            report: Reporting::default(),
        }
    }

    /// Config with the recipe's batch, inner length and `ρ`-derived step.
    pub fn from_recipe(recipe: &Recipe, kind: EstimatorKind, lipschitz: f64) -> Self {
        let mut cfg = SolverConfig::new(kind);
        cfg.batch = recipe.batch;
        cfg.inner = recipe.inner.unwrap_or(1);
        cfg.rho = Some(recipe.rho);
        cfg.lipschitz = Some(lipschitz);
        cfg.eta = recipe.eta;
        cfg.estimator.schedule = recipe.schedule;
        cfg
    }

    /// Effective step size in dimension `d`.
    pub fn step_size(&self, d: usize) -> Result<f64> {
        let eta = match self.rho {
            None => self.eta,
            Some(rho) => {
                if !(rho > 0.0 && rho < 0.5) {
                    return Err(ZoError::InvalidConfig(format!(
                        "rho must lie in (0, 1/2), got {rho}"
                    )));
                }
                let l = self.lipschitz.ok_or_else(|| {
                    ZoError::InvalidConfig("rho requires a Lipschitz estimate".into())
                })?;
                if !(l > 0.0 && l.is_finite()) {
                    return Err(ZoError::InvalidConfig(format!(
                        "Lipschitz estimate must be positive, got {l}"
                    )));
                }
                step_from_rho(rho, d, l, self.estimator.kind)
            }
        };
        if eta > 0.0 && eta.is_finite() {
            Ok(eta)
        } else {
            Err(ZoError::InvalidStep(eta))
        }
    }

    pub(crate) fn validate(&self, algo: Algorithm, n: usize, d: usize) -> Result<f64> {
        let bad = |m: String| Err(ZoError::InvalidConfig(m));
        if n == 0 {
            return Err(ZoError::EmptyDataset);
        }
        self.estimator.schedule.validate()?;
        match algo {
            Algorithm::ProxSvrg => {
                if self.epochs == 0 || self.inner == 0 {
                    return bad("epochs and inner length must be at least 1".into());
                }
            }
            _ => {
                if self.total_iters == 0 {
                    return bad("total_iters must be at least 1".into());
                }
            }
        }
        if algo != Algorithm::ProxGd
            && (self.batch == 0 || (algo.samples_without_replacement() && self.batch > n))
        {
            return Err(ZoError::InvalidBatch {
                batch: self.batch,
                n,
            });
        }
        if let Some(x0) = &self.x0 {
            x0.check_dim(d)?;
            if !x0.is_finite() {
                return bad("starting point has non-finite entries".into());
            }
        }
        if !(self.report.mu_report >= MU_FLOOR) {
            return bad(format!("mu_report {} below floor", self.report.mu_report));
        }
        self.step_size(d)
    }
}

fn step_from_rho(rho: f64, d: usize, l: f64, kind: EstimatorKind) -> f64 {
    match kind {
        EstimatorKind::Coordinate => rho / (d as f64 * l),
        EstimatorKind::Gaussian => rho / l,
    }
}

/// Hyperparameters prescribed by the convergence analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recipe {
    pub algorithm: Algorithm,
    pub estimator: EstimatorKind,
    pub batch: usize,
    /// Inner loop length, SVRG only.
    pub inner: Option<usize>,
    pub rho: f64,
    pub eta: f64,
    pub schedule: MuSchedule,
}

/// `b = ⌈n^(2/3)⌉`, `m = ⌈n^(1/3)⌉`, `ρ` per (algorithm, estimator) and
/// `η = ρ/(dL)` for CooSGE or `ρ/L` for GauSGE. Full gradient descent uses
/// `b = n`.
pub fn recipe_hyperparams(
    n: usize,
    d: usize,
    lipschitz: f64,
    kind: EstimatorKind,
    algo: Algorithm,
) -> Result<Recipe> {
    if n == 0 || d == 0 {
        return Err(ZoError::InvalidConfig("n and d must be positive".into()));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(ZoError::InvalidConfig(format!(
            "Lipschitz estimate must be positive, got {lipschitz}"
        )));
    }
    let rho = algo.recipe_rho(kind);
    let n64 = n as u64;
    let batch = match algo {
        Algorithm::ProxGd => n,
        _ => ceil_cbrt(n64 * n64) as usize,
    };
    Ok(Recipe {
        algorithm: algo,
        estimator: kind,
        batch,
        inner: (algo == Algorithm::ProxSvrg).then(|| ceil_cbrt(n64) as usize),
        rho,
        eta: step_from_rho(rho, d, lipschitz, kind),
        schedule: kind.default_schedule(),
    })
}

/// Smallest `r` with `r³ ≥ v`, in exact integer arithmetic.
fn ceil_cbrt(v: u64) -> u64 {
    let mut r = (v as f64).cbrt().round() as u64;
    while r > 0 && (r - 1).checked_pow(3).is_some_and(|c| c >= v) {
        r -= 1;
    }
    while r.checked_pow(3).is_none_or(|c| c < v) {
        r += 1;
    }
    r
}
