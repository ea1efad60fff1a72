//! Benchmark protocol: one problem, several solver runs sharing a start
//! point drawn from `N(0, I)`, compared on a common query budget.

use std::path::PathBuf;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{read_libsvm_path, split, Dataset};
use crate::error::{Result, ZoError};
use crate::estimators::{EstimatorKind, Exec, MuSchedule};
use crate::problems::{synthetic_classification, test_loss, ClassificationProblem};
use crate::prox::Regularizer;
use crate::rng::{standard_normal_vector, Purpose, RandomSource};
use crate::solvers::{
    recipe_hyperparams, rspgf, zo_prox_gd, zo_prox_saga, zo_prox_svrg, Algorithm, Reporting,
    SolverConfig, Trace,
};
use crate::vector::DenseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProblemSpec {
    /// LIBSVM file (optionally gzipped).
    Dataset { path: PathBuf, normalize: bool },
    /// Generated by [`synthetic_classification`].
    Synthetic { n: usize, d: usize },
}

/// One solver run. Unset fields fall back to the recipe for the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub algorithm: Algorithm,
    pub estimator: EstimatorKind,
    pub eta: Option<f64>,
    pub batch: Option<usize>,
    pub epochs: Option<usize>,
    pub inner: Option<usize>,
    pub iters: Option<usize>,
    pub mu_schedule: Option<MuSchedule>,
    pub shared_directions: bool,
}

impl SolverSpec {
    pub fn new(algorithm: Algorithm, estimator: EstimatorKind) -> Self {
        SolverSpec {
            algorithm,
            estimator,
            eta: None,
            batch: None,
            epochs: None,
            inner: None,
            iters: None,
            mu_schedule: None,
            shared_directions: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    /// Fraction of rows used for training; the rest is the test set.
    pub train_fraction: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub solvers: Vec<SolverSpec>,
    /// Per-run cap on solver queries.
    pub budget: Option<u64>,
    pub seed: u64,
    /// Lipschitz estimate for recipe step sizes; defaults to `max‖a_i‖²/4`.
    pub lipschitz: Option<f64>,
    /// `‖g_η‖²` on every k-th record; 0 disables it.
    pub grad_map_every: usize,
    /// Trace cadence; 1 records every iteration.
    pub record_every: usize,
    /// Run solvers concurrently (needs the `parallel` feature).
    pub parallel_runs: bool,
    pub exec: Exec,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            problem: ProblemSpec::Synthetic { n: 500, d: 50 },
            train_fraction: 0.5,
            lambda1: 1e-5,
            lambda2: 1e-5,
            solvers: Vec::new(),
            budget: None,
            seed: 0,
            lipschitz: None,
            grad_map_every: 0,
            record_every: 1,
            parallel_runs: true,
            exec: Exec::default(),
        }
    }
}

/// Defaults when neither a budget nor explicit lengths are given.
pub const DEFAULT_ITERS: usize = 1000;
pub const DEFAULT_EPOCHS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algo: String,
    pub estimator: String,
    pub b: usize,
    pub eta: f64,
    pub mu_schedule: String,
    pub final_objective: f64,
    pub final_test_loss: Option<f64>,
    pub total_queries: u64,
    pub wall_ns: u64,
    pub iterations: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub spec: SolverSpec,
    pub config: SolverConfig,
    pub trace: Trace,
    pub summary: RunSummary,
}

impl BenchmarkRun {
    /// `<algo>-<estimator>`, e.g. `svrg-coosge`.
    pub fn file_stem(&self) -> String {
        format!(
            "{}-{}",
            self.spec.algorithm.slug(),
            self.spec.estimator.name().to_ascii_lowercase()
        )
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub runs: Vec<BenchmarkRun>,
    pub x0: DenseVector,
    pub lipschitz: f64,
    pub n_train: usize,
    pub n_test: usize,
}

impl BenchmarkOutput {
    pub fn summary(&self) -> Summary {
        Summary {
            runs: self.runs.iter().map(|r| r.summary.clone()).collect(),
        }
    }
}

/// Loads the problem and its train/test split.
pub fn load_problem(spec: &RunSpec) -> Result<(ClassificationProblem, ClassificationProblem)> {
    let data: Dataset = match &spec.problem {
        ProblemSpec::Dataset { path, normalize } => {
            let mut ds = read_libsvm_path(path)?;
            if *normalize {
                ds.normalize_rows();
            }
            ds
        }
        ProblemSpec::Synthetic { n, d } => synthetic_classification(*n, *d, spec.seed)?,
    };
    let (train, test) = split(&data, spec.train_fraction, spec.seed)?;
    Ok((
        ClassificationProblem::from_dataset(&train),
        ClassificationProblem::from_dataset(&test),
    ))
}

/// Resolves a solver entry to a complete config for an `n × d` problem.
pub fn resolve_config(
    s: &SolverSpec,
    n: usize,
    d: usize,
    lipschitz: f64,
    budget: Option<u64>,
) -> Result<SolverConfig> {
    let recipe = recipe_hyperparams(n, d, lipschitz, s.estimator, s.algorithm)?;
    let mut cfg = SolverConfig::from_recipe(&recipe, s.estimator, lipschitz);
    if let Some(eta) = s.eta {
        cfg.eta = eta;
        cfg.rho = None;
    }
    if let Some(b) = s.batch {
        cfg.batch = b.min(n);
    }
    if let Some(m) = s.inner {
        cfg.inner = m;
    }
    if let Some(mu) = s.mu_schedule {
        cfg.estimator.schedule = mu;
    }
    cfg.estimator.shared_directions = s.shared_directions;
    cfg.budget = budget;

    // Enough iterations to exhaust the budget unless lengths were given.
    let q = s.estimator.queries_per_component(d);
    let (n64, b64) = (n as u64, cfg.batch as u64);
    let per_iter = match s.algorithm {
        Algorithm::ProxGd => q * n64,
        Algorithm::Rspgf | Algorithm::ProxSaga => q * b64,
        Algorithm::ProxSvrg => q * n64 + 2 * q * b64 * cfg.inner as u64,
    };
    let fill = |default: usize| match budget {
        Some(b) => (b / per_iter.max(1) + 1) as usize,
        None => default,
    };
    match s.algorithm {
        Algorithm::ProxSvrg => cfg.epochs = s.epochs.unwrap_or_else(|| fill(DEFAULT_EPOCHS)),
        _ => cfg.total_iters = s.iters.unwrap_or_else(|| fill(DEFAULT_ITERS)),
    }
    Ok(cfg)
}

pub fn run_solver(
    algo: Algorithm,
    problem: &ClassificationProblem,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<Trace> {
    match algo {
        Algorithm::ProxGd => zo_prox_gd(problem, reg, cfg),
        Algorithm::Rspgf => rspgf(problem, reg, cfg),
        Algorithm::ProxSvrg => zo_prox_svrg(problem, reg, cfg),
        Algorithm::ProxSaga => zo_prox_saga(problem, reg, cfg),
    }
}

/// Runs every solver entry of `spec` from the same `x_0`.
pub fn run_benchmark(spec: &RunSpec) -> Result<BenchmarkOutput> {
    let (train, test) = load_problem(spec)?;
    run_benchmark_on(spec, train, test)
}

/// [`run_benchmark`] on an already loaded problem.
pub fn run_benchmark_on(
    spec: &RunSpec,
    train: ClassificationProblem,
    test: ClassificationProblem,
) -> Result<BenchmarkOutput> {
    let reg = Regularizer::elastic_net(spec.lambda1, spec.lambda2)?;
    let (n, d) = (train.len(), crate::oracle::ComponentOracle::dim(&train));
    let lipschitz = spec.lipschitz.unwrap_or_else(|| train.lipschitz_bound());
    if !(lipschitz > 0.0) {
        return Err(ZoError::InvalidConfig(
            "Lipschitz estimate is zero; pass one explicitly".into(),
        ));
    }
    let mut start = RandomSource::new(spec.seed).stream(Purpose::Start, 0, 0);
    let x0 = standard_normal_vector(&mut start, d);

    let test = std::sync::Arc::new(test);
    let configs = spec
        .solvers
        .iter()
        .map(|s| {
            let mut cfg = resolve_config(s, n, d, lipschitz, spec.budget)?;
            cfg.seed = spec.seed;
            cfg.x0 = Some(x0.clone());
            cfg.estimator.exec = spec.exec;
            let t = test.clone();
            cfg.report = Reporting::objective_only()
                .every(spec.grad_map_every)
                .record_every(spec.record_every)
                .with_test_loss(std::sync::Arc::new(move |x: &[f64]| {
                    test_loss(&t, x).unwrap_or(f64::NAN)
                }));
            Ok((s.clone(), cfg))
        })
        .collect::<Result<Vec<_>>>()?;

    let one = |(s, cfg): &(SolverSpec, SolverConfig)| -> Result<BenchmarkRun> {
        let started = Instant::now();
        let trace = run_solver(s.algorithm, &train, &reg, cfg)?;
        let wall_ns = started.elapsed().as_nanos() as u64;
        let summary = RunSummary {
            algo: s.algorithm.name().to_string(),
            estimator: s.estimator.name().to_string(),
            b: trace.batch,
            eta: trace.eta,
            mu_schedule: cfg.estimator.schedule.to_string(),
            final_objective: trace.final_objective(),
            final_test_loss: trace.final_test_loss(),
            total_queries: trace.total_queries,
            wall_ns,
            iterations: trace.records.len(),
            truncated: trace.truncated,
        };
        Ok(BenchmarkRun {
            spec: s.clone(),
            config: cfg.clone(),
            trace,
            summary,
        })
    };
    let runs = if spec.parallel_runs {
        #[cfg(feature = "parallel")]
        {
            configs.par_iter().map(one).collect::<Result<Vec<_>>>()?
        }
        #[cfg(not(feature = "parallel"))]
        {
            configs.iter().map(one).collect::<Result<Vec<_>>>()?
        }
    } else {
        configs.iter().map(one).collect::<Result<Vec<_>>>()?
    };
    Ok(BenchmarkOutput {
        runs,
        x0,
        lipschitz,
        n_train: n,
        n_test: test.len(),
    })
}
