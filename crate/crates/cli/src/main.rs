//! `zoprox` benchmark harness.
//!
//! ```text
//! zoprox run --synthetic 500x50 --algo svrg,saga --estimator coo,gau --budget 2000000 --out results
//! zoprox recipe --n 1000 --d 100 --lipschitz 1 --algo svrg --estimator coo
//! zoprox stats --dataset a9a.txt
//! ```
//!
//! Exit codes: 0 on success, 1 on a configuration error, 2 on a runtime error.

mod config;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zoprox::benchmark::{run_benchmark, BenchmarkOutput};
use zoprox::data::read_libsvm_path;
use zoprox::problems::ClassificationProblem;
use zoprox::{recipe_hyperparams, Algorithm, EstimatorKind, ZoError};

use config::Settings;

#[derive(Parser)]
#[command(
    name = "zoprox",
    version,
    about = "Zeroth-order proximal solver benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run solvers and write one CSV trace per run plus summary.json
    #[command(allow_negative_numbers = true)]
    Run {
        /// Flat TOML file with the same keys as the flags (snake_case)
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Box<Settings>,
    },
    /// Print recipe hyperparameters without running anything
    Recipe {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        lipschitz: Option<f64>,
        /// Take n, d and the Lipschitz bound from a LIBSVM file
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "gd,rspgf,svrg,saga")]
        algo: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "coo,gau")]
        estimator: Vec<String>,
    },
    /// Dataset statistics
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ZoError> for Failure {
    fn from(e: ZoError) -> Self {
        match e.root() {
            ZoError::InvalidConfig(_)
            | ZoError::InvalidBatch { .. }
            | ZoError::InvalidStep(_)
            | ZoError::Split(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, settings } => run(config.as_deref(), *settings),
        Command::Recipe {
            n,
            d,
            lipschitz,
            dataset,
            algo,
            estimator,
        } => recipe(n, d, lipschitz, dataset.as_deref(), &algo, &estimator),
        Command::Stats { dataset } => stats(&dataset),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(config: Option<&Path>, flags: Settings) -> Result<(), Failure> {
    let settings = match config {
        Some(path) => Settings::load(path)?.overlay(flags),
        None => flags,
    };
    let spec = settings.to_run_spec()?;
    if let Some(path) = &settings.dataset {
        if !path.is_file() {
            return Err(Failure::Config(format!(
                "dataset {} not found",
                path.display()
            )));
        }
    }
    let out_dir = settings.out_dir();
    let output = if spec.solvers.is_empty() {
        None
    } else {
        Some(run_benchmark(&spec)?)
    };
    write_outputs(&out_dir, output.as_ref(), settings.timing)
        .map_err(|e| Failure::Runtime(format!("writing to {}: {e}", out_dir.display())))?;
    if let Some(out) = &output {
        print_table(out);
    }
    Ok(())
}

fn write_outputs(dir: &Path, output: Option<&BenchmarkOutput>, timing: bool) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let summary = match output {
        Some(out) => {
            for run in &out.runs {
                let path = dir.join(format!("{}.csv", run.file_stem()));
                let mut w = BufWriter::new(fs::File::create(path)?);
                run.trace.write_csv(&mut w, timing)?;
                w.flush()?;
            }
            out.summary()
        }
        None => zoprox::benchmark::Summary { runs: Vec::new() },
    };
    let json = serde_json::to_string_pretty(&summary).map_err(io::Error::other)?;
    fs::write(dir.join("summary.json"), json + "\n")
}

fn print_table(out: &BenchmarkOutput) {
    println!(
        "n_train={} n_test={} L={:.6}",
        out.n_train, out.n_test, out.lipschitz
    );
    println!(
        "{:<24} {:>6} {:>12} {:>14} {:>14} {:>12}",
        "run", "b", "eta", "objective", "test_loss", "queries"
    );
    for r in &out.runs {
        let s = &r.summary;
        println!(
            "{:<24} {:>6} {:>12.6e} {:>14.8} {:>14.8} {:>12}{}",
            format!("{}-{}", s.algo, s.estimator),
            s.b,
            s.eta,
            s.final_objective,
            s.final_test_loss.unwrap_or(f64::NAN),
            s.total_queries,
            if s.truncated { " (budget)" } else { "" }
        );
    }
}

fn recipe(
    n: Option<usize>,
    d: Option<usize>,
    lipschitz: Option<f64>,
    dataset: Option<&Path>,
    algos: &[String],
    kinds: &[String],
) -> Result<(), Failure> {
    let from_data = match dataset {
        Some(path) => {
            let ds = read_libsvm_path(path)?;
            let p = ClassificationProblem::from_dataset(&ds);
            Some((ds.n(), ds.d, p.lipschitz_bound()))
        }
        None => None,
    };
    let missing = |what: &str| Failure::Config(format!("--{what} is required without --dataset"));
    let n = n.or(from_data.map(|t| t.0)).ok_or_else(|| missing("n"))?;
    let d = d.or(from_data.map(|t| t.1)).ok_or_else(|| missing("d"))?;
    let l = lipschitz
        .or(from_data.map(|t| t.2))
        .ok_or_else(|| missing("lipschitz"))?;
    println!("n={n} d={d} L={l}");
    println!(
        "{:<12} {:<8} {:>8} {:>6} {:>10} {:>14}  mu",
        "algorithm", "est", "b", "m", "rho", "eta"
    );
    for a in algos.iter().filter(|s| !s.trim().is_empty()) {
        let a: Algorithm = a.trim().parse()?;
        for k in kinds.iter().filter(|s| !s.trim().is_empty()) {
            let k: EstimatorKind = k.trim().parse()?;
            let r = recipe_hyperparams(n, d, l, k, a)?;
            println!(
                "{:<12} {:<8} {:>8} {:>6} {:>10.6} {:>14.6e}  {}",
                a.name(),
                k.name(),
                r.batch,
                r.inner.map_or("-".to_string(), |m| m.to_string()),
                r.rho,
                r.eta,
                r.schedule
            );
        }
    }
    Ok(())
}

fn stats(path: &Path) -> Result<(), Failure> {
    let ds = read_libsvm_path(path)?;
    let s = ds.stats();
    println!(
        "n={} d={} nnz={} positives={} negatives={} density={:.6} max_row_norm_sq={} labels={:?}",
        s.n, s.d, s.nnz, s.positives, s.negatives, s.density, s.max_row_norm_sq, ds.label_mapping
    );
    Ok(())
}
