use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn zoprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zoprox"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const SMALL: &[&str] = &[
    "run",
    "--synthetic",
    "80x6",
    "--algo",
    "rspgf,svrg,saga",
    "--estimator",
    "coo,gau",
    "--budget",
    "20000",
    "--seed",
    "5",
];

#[test]
fn empty_solver_list_writes_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoprox(&["run", "--algo", "", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary(dir.path()), serde_json::json!({"runs": []}));
}

#[test]
fn repeated_runs_write_identical_traces() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let mut args = SMALL.to_vec();
        let out = out_arg(dir.path());
        args.extend(["--out", &out]);
        let o = zoprox(&args);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    let mut first_rows = Vec::new();
    for name in &names {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
        let text = String::from_utf8(x).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iter,epoch,objective,test_loss,queries,grad_map_sq,elapsed_ns"
        );
        let row0: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!((row0[0], row0[4]), ("0", "0"));
        first_rows.push(row0[2].to_string());
    }
    // Every run starts from the same x0.
    assert!(first_rows.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn summary_reports_every_run_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL.to_vec();
    let out = out_arg(dir.path());
    args.extend(["--out", &out]);
    assert_eq!(zoprox(&args).status.code(), Some(0));
    let s = summary(dir.path());
    let runs = s["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 6);
    for r in runs {
        for key in [
            "algo",
            "estimator",
            "b",
            "eta",
            "mu_schedule",
            "final_objective",
            "final_test_loss",
            "total_queries",
            "wall_ns",
        ] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        // n_train = 40, d = 6: one SVRG epoch costs at most 12·40 + 2·12·12·4.
        assert!(r["total_queries"].as_u64().unwrap() <= 20_000 + 12 * 40 + 2 * 12 * 12 * 4);
    }
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.toml");
    fs::write(
        &cfg,
        "synthetic = \"60x4\"\nalgo = [\"saga\"]\nestimator = \"gau\"\niters = 7\nbatch = 3\n",
    )
    .unwrap();
    let out = out_arg(&dir.path().join("res"));
    let o = zoprox(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--batch",
        "5",
        "--out",
        &out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = summary(&dir.path().join("res"));
    assert_eq!(s["runs"][0]["algo"], "ZO-ProxSAGA");
    assert_eq!(s["runs"][0]["b"], 5);
    assert_eq!(s["runs"][0]["iterations"], 7);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    for args in [
        vec!["run", "--algo", "newton", "--out", &out],
        vec!["run", "--synthetic", "12", "--out", &out],
        vec!["run", "--eta", "-1", "--synthetic", "10x2", "--out", &out],
        vec!["run", "--dataset", "/no/such/file", "--out", &out],
        vec!["run", "--no-such-flag"],
        vec!["recipe", "--n", "10"],
    ] {
        assert_eq!(zoprox(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.libsvm");
    fs::write(&data, "+1 1:1\n-1 2:x\n").unwrap();
    let out = out_arg(dir.path());
    let o = zoprox(&["run", "--dataset", data.to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn dataset_runs_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.libsvm");
    let mut text = String::new();
    for i in 0..20 {
        let label = if i % 2 == 0 { 1 } else { 2 };
        text.push_str(&format!(
            "{label} 1:{} 3:{}\n",
            i as f64 / 10.0,
            1.0 - i as f64 / 20.0
        ));
    }
    fs::write(&data, text).unwrap();
    let o = zoprox(&["stats", "--dataset", data.to_str().unwrap()]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("n=20 d=3 nnz=40"), "{s}");
    assert!(s.contains("OneTwo"));
    let out = out_arg(&dir.path().join("res"));
    let o = zoprox(&[
        "run",
        "--dataset",
        data.to_str().unwrap(),
        "--algo",
        "svrg",
        "--estimator",
        "coo",
        "--epochs",
        "2",
        "--out",
        &out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(dir.path().join("res/svrg-coosge.csv").is_file());
}

fn recipe_row(stdout: &str, algo: &str, est: &str) -> Vec<String> {
    stdout
        .lines()
        .find(|l| l.starts_with(algo) && l.contains(est))
        .unwrap_or_else(|| panic!("no {algo} {est} row in\n{stdout}"))
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

#[test]
fn recipe_for_small_problem() {
    let o = zoprox(&[
        "recipe",
        "--n",
        "1000",
        "--d",
        "100",
        "--lipschitz",
        "1",
        "--algo",
        "svrg",
        "--estimator",
        "coo",
    ]);
    let out = String::from_utf8(o.stdout).unwrap();
    let row = recipe_row(&out, "ZO-ProxSVRG", "CooSGE");
    assert_eq!(&row[2..4], ["100", "10"]);
    assert_eq!(row[4].parse::<f64>().unwrap(), 0.25);
    assert!((row[5].parse::<f64>().unwrap() - 0.0025).abs() < 1e-12);

    let o = zoprox(&[
        "recipe",
        "--n",
        "1",
        "--d",
        "5",
        "--lipschitz",
        "1",
        "--algo",
        "svrg",
    ]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(&recipe_row(&out, "ZO-ProxSVRG", "GauSGE")[2..4], ["1", "1"]);
}

#[test]
fn recipe_matches_rederivation_for_w8a_size() {
    let (n, d, l) = (64_700u128, 300.0, 2.5);
    // Smallest integers with b³ ≥ n² and m³ ≥ n.
    let b = (1u128..).find(|b| b * b * b >= n * n).unwrap();
    let m = (1u128..).find(|m| m * m * m >= n).unwrap();
    let o = zoprox(&["recipe", "--n", "64700", "--d", "300", "--lipschitz", "2.5"]);
    let out = String::from_utf8(o.stdout).unwrap();
    for (algo, est, rho, coo) in [
        ("ZO-ProxSVRG", "CooSGE", 1.0 / 4.0, true),
        ("ZO-ProxSVRG", "GauSGE", 1.0 / 6.0, false),
        ("ZO-ProxSAGA", "CooSGE", 1.0 / 8.0, true),
        ("ZO-ProxSAGA", "GauSGE", 1.0 / 12.0, false),
    ] {
        let row = recipe_row(&out, algo, est);
        assert_eq!(row[2], b.to_string());
        if algo == "ZO-ProxSVRG" {
            assert_eq!(row[3], m.to_string());
        }
        assert!((row[4].parse::<f64>().unwrap() - rho).abs() < 1e-6);
        let eta = if coo { rho / (d * l) } else { rho / l };
        assert!((row[5].parse::<f64>().unwrap() / eta - 1.0).abs() < 1e-6);
    }
}
