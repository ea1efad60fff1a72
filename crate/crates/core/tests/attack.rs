use std::process::Command;
use std::time::Duration;

use zoprox::problems::{attack_objective, ExternalScorer, Scorer, SoftmaxLinearScorer};
use zoprox::{
    zo_prox_gd, ComponentOracle, DenseVector, EstimatorKind, Reporting, SolverConfig, ZoError,
};

const SOFTMAX_SCRIPT: &str = r#"
import math, sys
W = [[1.0, -2.0, 0.5], [-0.5, 1.0, 1.0]]
for line in sys.stdin:
    a = [float(t) for t in line.split()]
    z = [sum(w * v for w, v in zip(row, a)) for row in W]
    m = max(z)
    e = [math.exp(v - m) for v in z]
    s = sum(e)
    print(" ".join(repr(v / s) for v in e), flush=True)
"#;

fn python(script: &str) -> Command {
    let mut c = Command::new("python3");
    c.arg("-c").arg(script);
    c
}

fn local() -> SoftmaxLinearScorer {
    SoftmaxLinearScorer {
        weights: vec![
            DenseVector::from_vec(vec![1.0, -2.0, 0.5]),
            DenseVector::from_vec(vec![-0.5, 1.0, 1.0]),
        ],
        bias: vec![0.0, 0.0],
    }
}

#[test]
fn external_scorer_matches_in_process_model() {
    let ext = ExternalScorer::spawn(python(SOFTMAX_SCRIPT), 2, Duration::from_secs(10)).unwrap();
    for input in [[0.1, 0.2, 0.3], [-1.0, 4.0, 0.0], [0.0, 0.0, 0.0]] {
        let a = ext.scores(&input).unwrap();
        let b = local().scores(&input).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn attack_runs_against_external_scorer() {
    let ext = ExternalScorer::spawn(python(SOFTMAX_SCRIPT), 2, Duration::from_secs(10)).unwrap();
    let examples = vec![
        DenseVector::from_vec(vec![1.0, 0.0, 0.2]),
        DenseVector::from_vec(vec![0.5, -0.3, 0.0]),
    ];
    let (obj, reg) = attack_objective(ext, examples, vec![0, 0], 1e-3, 1e-3).unwrap();
    let mut cfg = SolverConfig::new(EstimatorKind::Gaussian);
    cfg.eta = 1.0 / 3.0;
    cfg.total_iters = 20;
    cfg.report = Reporting::objective_only();
    let trace = zo_prox_gd(&obj, &reg, &cfg).unwrap();
    assert!(trace.final_objective() <= trace.initial.objective);
    assert!(obj.eval(0, &trace.last_x).unwrap() >= 0.0);
}

#[test]
fn slow_scorer_times_out() {
    let script = "import sys, time\nfor line in sys.stdin:\n    time.sleep(5)\n";
    let ext = ExternalScorer::spawn(python(script), 2, Duration::from_millis(200)).unwrap();
    let err = ext.scores(&[0.0, 0.0, 0.0]).unwrap_err();
    assert!(err.contains("timed out"), "{err}");
}

#[test]
fn malformed_replies_are_rejected() {
    let wrong_count = "import sys\nfor line in sys.stdin:\n    print('1.0', flush=True)\n";
    let ext = ExternalScorer::spawn(python(wrong_count), 2, Duration::from_secs(10)).unwrap();
    assert!(ext.scores(&[0.0]).is_err());

    let not_probabilities =
        "import sys\nfor line in sys.stdin:\n    print('0.9 0.9', flush=True)\n";
    let ext = ExternalScorer::spawn(python(not_probabilities), 2, Duration::from_secs(10)).unwrap();
    assert!(ext.scores(&[0.0]).is_err());

    let (obj, _) = attack_objective(
        ExternalScorer::spawn(
            python("import sys\nsys.exit(0)\n"),
            2,
            Duration::from_secs(10),
        )
        .unwrap(),
        vec![DenseVector::zeros(1)],
        vec![1],
        0.0,
        0.0,
    )
    .unwrap();
    assert!(matches!(
        obj.eval(0, &[0.0]),
        Err(ZoError::OracleUnavailable { component: 0, .. })
    ));
}

#[test]
fn attack_objective_validates_inputs() {
    let ex = vec![DenseVector::zeros(3)];
    assert!(matches!(
        attack_objective(local(), ex.clone(), vec![2], 0.0, 0.0),
        Err(ZoError::Label(_))
    ));
    assert!(attack_objective(local(), ex, vec![0, 1], 0.0, 0.0).is_err());
    assert!(matches!(
        attack_objective(local(), vec![], vec![], 0.0, 0.0),
        Err(ZoError::EmptyDataset)
    ));
}
