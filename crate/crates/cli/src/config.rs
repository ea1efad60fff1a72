use std::path::{Path, PathBuf};

use serde::Deserialize;
use zoprox::benchmark::{ProblemSpec, RunSpec, SolverSpec};
use zoprox::{Algorithm, EstimatorKind, Exec};

use crate::Failure;

/// Solver and problem settings shared by the config file and the flags.
/// Flags win over the file; unset fields fall back to the recipe.
#[derive(Debug, Default, Clone, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// LIBSVM training data (plain or gzipped)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Synthetic classification set, as NxD
    #[arg(long, conflicts_with = "dataset")]
    pub synthetic: Option<String>,
    /// Comma-separated algorithms: gd, rspgf, svrg, saga
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "list")]
    pub algo: Option<Vec<String>>,
    /// Comma-separated estimators: coo, gau
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "list")]
    pub estimator: Option<Vec<String>>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// SVRG outer loops
    #[arg(long)]
    pub epochs: Option<usize>,
    /// SVRG inner loop length
    #[arg(long)]
    pub inner: Option<usize>,
    /// Iterations for gd, rspgf and saga
    #[arg(long)]
    pub iters: Option<usize>,
    /// Per-run cap on solver queries
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Use the recipe's step size, batch and inner length, ignoring overrides
    #[arg(long)]
    #[serde(default)]
    pub recipe: bool,
    /// Write measured elapsed times into the traces
    #[arg(long)]
    #[serde(default)]
    pub timing: bool,
    /// Trace every k-th iteration
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Compute the gradient mapping on every k-th record (0 disables)
    #[arg(long)]
    pub gradmap_every: Option<usize>,
    /// Scale every example to unit norm
    #[arg(long)]
    #[serde(default)]
    pub normalize: bool,
    /// Lipschitz estimate (default: max row norm squared / 4)
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Fraction of rows used for training
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Run estimates and solvers on one thread
    #[arg(long)]
    #[serde(default)]
    pub sequential: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ListOrString {
    List(Vec<String>),
    One(String),
}

fn list<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Vec<String>>, D::Error> {
    Ok(Some(match ListOrString::deserialize(d)? {
        ListOrString::List(v) => v,
        ListOrString::One(s) => s.split(',').map(str::to_string).collect(),
    }))
}

impl Settings {
    pub fn load(path: &Path) -> Result<Settings, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(self, flags: Settings) -> Settings {
        Settings {
            dataset: flags.dataset.or(self.dataset),
            synthetic: flags.synthetic.or(self.synthetic),
            algo: flags.algo.or(self.algo),
            estimator: flags.estimator.or(self.estimator),
            eta: flags.eta.or(self.eta),
            batch: flags.batch.or(self.batch),
            epochs: flags.epochs.or(self.epochs),
            inner: flags.inner.or(self.inner),
            iters: flags.iters.or(self.iters),
            budget: flags.budget.or(self.budget),
            seed: flags.seed.or(self.seed),
            out: flags.out.or(self.out),
            lambda1: flags.lambda1.or(self.lambda1),
            lambda2: flags.lambda2.or(self.lambda2),
            recipe: flags.recipe || self.recipe,
            timing: flags.timing || self.timing,
            record_every: flags.record_every.or(self.record_every),
            gradmap_every: flags.gradmap_every.or(self.gradmap_every),
            normalize: flags.normalize || self.normalize,
            lipschitz: flags.lipschitz.or(self.lipschitz),
            train_fraction: flags.train_fraction.or(self.train_fraction),
            sequential: flags.sequential || self.sequential,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("zoprox-out"))
    }

    pub fn to_run_spec(&self) -> Result<RunSpec, Failure> {
        if self.dataset.is_some() && self.synthetic.is_some() {
            return Err(Failure::Config(
                "give either dataset or synthetic, not both".into(),
            ));
        }
        let defaults = RunSpec::default();
        let problem = match (&self.dataset, &self.synthetic) {
            (Some(path), _) => ProblemSpec::Dataset {
                path: path.clone(),
                normalize: self.normalize,
            },
            (None, Some(size)) => {
                let (n, d) = parse_size(size)?;
                ProblemSpec::Synthetic { n, d }
            }
            (None, None) => defaults.problem.clone(),
        };

        let algos = names(&self.algo, &["rspgf", "svrg", "saga"])?
            .iter()
            .map(|s| s.parse::<Algorithm>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Config(e.to_string()))?;
        let kinds = names(&self.estimator, &["coo", "gau"])?
            .iter()
            .map(|s| s.parse::<EstimatorKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Config(e.to_string()))?;
        let mut solvers: Vec<SolverSpec> = Vec::new();
        for &a in &algos {
            for &k in &kinds {
                if solvers.iter().any(|s| s.algorithm == a && s.estimator == k) {
                    continue;
                }
                let mut s = SolverSpec::new(a, k);
                if !self.recipe {
                    s.eta = self.eta;
                    s.batch = self.batch;
                    s.inner = self.inner;
                }
                s.epochs = self.epochs;
                s.iters = self.iters;
                solvers.push(s);
            }
        }

        Ok(RunSpec {
            problem,
            train_fraction: self.train_fraction.unwrap_or(defaults.train_fraction),
            lambda1: self.lambda1.unwrap_or(defaults.lambda1),
            lambda2: self.lambda2.unwrap_or(defaults.lambda2),
            solvers,
            budget: self.budget,
            seed: self.seed.unwrap_or(defaults.seed),
            lipschitz: self.lipschitz,
            grad_map_every: self.gradmap_every.unwrap_or(10),
            record_every: self.record_every.unwrap_or(defaults.record_every),
            parallel_runs: !self.sequential,
            exec: if self.sequential {
                Exec::Sequential
            } else {
                Exec::Parallel
            },
        })
    }
}

/// Explicit list (blank entries dropped, so `--algo ''` selects nothing) or
/// the defaults.
fn names(given: &Option<Vec<String>>, default: &[&str]) -> Result<Vec<String>, Failure> {
    Ok(match given {
        Some(v) => v
            .iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        None => default.iter().map(|s| s.to_string()).collect(),
    })
}

pub fn parse_size(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Config(format!("expected NxD, got `{s}`"));
    let (n, d) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let n = n.trim().parse().map_err(|_| bad())?;
    let d = d.trim().parse().map_err(|_| bad())?;
    Ok((n, d))
}
