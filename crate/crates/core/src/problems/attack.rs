//! Universal-perturbation attack against a black-box classifier:
//! `f_i(x) = max{F_{l_i}(a_i + x) − max_{j≠l_i} F_j(a_i + x), 0}` with an
//! elastic-net regularizer.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use crate::error::{Result, ZoError};
use crate::oracle::ComponentOracle;
use crate::prox::Regularizer;
use crate::vector::{dot, DenseVector};

/// Black-box model returning one score per class.
pub trait Scorer: Send + Sync {
    fn num_classes(&self) -> usize;

    fn scores(&self, input: &[f64]) -> std::result::Result<Vec<f64>, String>;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn scores(&self, input: &[f64]) -> std::result::Result<Vec<f64>, String> {
        (**self).scores(input)
    }
}

pub struct AttackObjective<S> {
    scorer: S,
    examples: Vec<DenseVector>,
    labels: Vec<usize>,
    d: usize,
}

/// Builds the attack components over `examples` with true class `labels`,
/// plus the matching `ElasticNet(λ1, λ2)` regularizer.
pub fn attack_objective<S: Scorer>(
    scorer: S,
    examples: Vec<DenseVector>,
    labels: Vec<usize>,
    l1: f64,
    l2: f64,
) -> Result<(AttackObjective<S>, Regularizer)> {
    if examples.is_empty() {
        return Err(ZoError::EmptyDataset);
    }
    if examples.len() != labels.len() {
        return Err(ZoError::InvalidConfig(format!(
            "{} examples but {} labels",
            examples.len(),
            labels.len()
        )));
    }
    let d = examples[0].dim();
    for e in &examples {
        e.check_dim(d)?;
    }
    let k = scorer.num_classes();
    if k < 2 {
        return Err(ZoError::InvalidConfig(
            "scorer needs at least two classes".into(),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(ZoError::Label(format!(
            "class {bad} out of range for K = {k}"
        )));
    }
    let reg = Regularizer::elastic_net(l1, l2)?;
    Ok((
        AttackObjective {
            scorer,
            examples,
            labels,
            d,
        },
        reg,
    ))
}

impl<S: Scorer> AttackObjective<S> {
    pub fn scorer(&self) -> &S {
        &self.scorer
    }

    /// Fraction of examples the perturbation `x` makes misclassified.
    pub fn success_rate(&self, x: &[f64]) -> Result<f64> {
        let mut fooled = 0usize;
        for i in 0..self.examples.len() {
            if self.eval(i, x)? == 0.0 {
                fooled += 1;
            }
        }
        Ok(fooled as f64 / self.examples.len() as f64)
    }
}

impl<S: Scorer> ComponentOracle for AttackObjective<S> {
    fn num_components(&self) -> usize {
        self.examples.len()
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(ZoError::Dimension {
                expected: self.d,
                found: x.len(),
            });
        }
        let input: Vec<f64> = self.examples[i].iter().zip(x).map(|(a, b)| a + b).collect();
        let scores = self
            .scorer
            .scores(&input)
            .map_err(|reason| ZoError::OracleUnavailable {
                component: i,
                reason,
            })?;
        if scores.len() != self.scorer.num_classes() {
            return Err(ZoError::OracleUnavailable {
                component: i,
                reason: format!(
                    "expected {} scores, got {}",
                    self.scorer.num_classes(),
                    scores.len()
                ),
            });
        }
        let own = scores[self.labels[i]];
        let best_other = scores
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != self.labels[i])
            .map(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((own - best_other).max(0.0))
    }
}

/// `softmax(W a + c)`: a linear model with probability outputs.
#[derive(Debug, Clone)]
pub struct SoftmaxLinearScorer {
    pub weights: Vec<DenseVector>,
    pub bias: Vec<f64>,
}

impl Scorer for SoftmaxLinearScorer {
    fn num_classes(&self) -> usize {
        self.weights.len()
    }

    fn scores(&self, input: &[f64]) -> std::result::Result<Vec<f64>, String> {
        let z: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, input) + b)
            .collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        Ok(e.into_iter().map(|v| v / s).collect())
    }
}

/// Scorer backed by a child process speaking a line protocol: each request
/// is one line of `d` whitespace-separated floats, each reply one line of
/// `K` whitespace-separated probabilities summing to about 1.
///
/// Requests are serialized; concurrent callers wait their turn.
pub struct ExternalScorer {
    classes: usize,
    timeout: Duration,
    sum_tolerance: f64,
    io: Mutex<ScorerIo>,
}

struct ScorerIo {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<std::io::Result<String>>,
}

impl ExternalScorer {
    pub fn spawn(mut command: Command, classes: usize, timeout: Duration) -> Result<Self> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(ExternalScorer {
            classes,
            timeout,
            sum_tolerance: 1e-3,
            io: Mutex::new(ScorerIo {
                child,
                stdin,
                replies: rx,
            }),
        })
    }

    /// Accepted deviation of the reply's sum from 1.
    pub fn with_sum_tolerance(mut self, tol: f64) -> Self {
        self.sum_tolerance = tol;
        self
    }
}

impl Scorer for ExternalScorer {
    fn num_classes(&self) -> usize {
        self.classes
    }

    fn scores(&self, input: &[f64]) -> std::result::Result<Vec<f64>, String> {
        let mut io = self
            .io
            .lock()
            .map_err(|_| "scorer lock poisoned".to_string())?;
        let mut line = input
            .iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(" ");
        line.push('\n');
        io.stdin
            .write_all(line.as_bytes())
            .and_then(|_| io.stdin.flush())
            .map_err(|e| format!("write to scorer failed: {e}"))?;
        let reply = match io.replies.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(format!("read from scorer failed: {e}")),
            Err(RecvTimeoutError::Timeout) => {
                return Err(format!("scorer timed out after {:?}", self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => return Err("scorer exited".into()),
        };
        let scores = reply
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format!("non-numeric scorer reply `{reply}`: {e}"))?;
        if scores.len() != self.classes {
            return Err(format!(
                "scorer replied with {} values, expected {}",
                scores.len(),
                self.classes
            ));
        }
        let sum: f64 = scores.iter().sum();
        if !scores.iter().all(|s| s.is_finite()) || (sum - 1.0).abs() > self.sum_tolerance {
            return Err(format!(
                "scorer reply does not look like probabilities: `{reply}`"
            ));
        }
        Ok(scores)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Ok(io) = self.io.get_mut() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<f64>);
    impl Scorer for Fixed {
        fn num_classes(&self) -> usize {
            self.0.len()
        }
        fn scores(&self, _: &[f64]) -> std::result::Result<Vec<f64>, String> {
            Ok(self.0.clone())
        }
    }

    struct Broken;
    impl Scorer for Broken {
        fn num_classes(&self) -> usize {
            2
        }
        fn scores(&self, _: &[f64]) -> std::result::Result<Vec<f64>, String> {
            Err("model offline".into())
        }
    }

    fn one_example() -> Vec<DenseVector> {
        vec![DenseVector::zeros(3)]
    }

    #[test]
    fn correctly_classified_margin() {
        let (obj, reg) =
            attack_objective(Fixed(vec![0.9, 0.1]), one_example(), vec![0], 1e-3, 1.0).unwrap();
        assert!((obj.eval(0, &[0.0; 3]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(reg, Regularizer::ElasticNet { l1: 1e-3, l2: 1.0 });
    }

    #[test]
    fn already_fooled_is_zero() {
        let (obj, _) =
            attack_objective(Fixed(vec![0.2, 0.5, 0.3]), one_example(), vec![0], 0.0, 0.0).unwrap();
        assert_eq!(obj.eval(0, &[0.0; 3]).unwrap(), 0.0);
        assert_eq!(obj.success_rate(&[0.0; 3]).unwrap(), 1.0);
    }

    #[test]
    fn scorer_failure_names_the_example() {
        let ex = vec![DenseVector::zeros(2), DenseVector::zeros(2)];
        let (obj, _) = attack_objective(Broken, ex, vec![0, 1], 0.0, 0.0).unwrap();
        match obj.eval(1, &[0.0, 0.0]) {
            Err(ZoError::OracleUnavailable {
                component: 1,
                reason,
            }) => {
                assert!(reason.contains("offline"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(attack_objective(Fixed(vec![1.0, 0.0]), vec![], vec![], 0.0, 0.0).is_err());
        assert!(attack_objective(Fixed(vec![1.0, 0.0]), one_example(), vec![2], 0.0, 0.0).is_err());
        assert!(attack_objective(Fixed(vec![1.0]), one_example(), vec![0], 0.0, 0.0).is_err());
    }

    #[test]
    fn linear_three_class_toy() {
        // logits at a = (1, 2): (1·1 + 0·2, 0·1 + 1·2, −1·1 + 0.5·2) + bias
        //                     = (1, 2, 0) + (0.5, 0, 0) = (1.5, 2, 0)
        let scorer = SoftmaxLinearScorer {
            weights: vec![
                vec![1.0, 0.0].into(),
                vec![0.0, 1.0].into(),
                vec![-1.0, 0.5].into(),
            ],
            bias: vec![0.5, 0.0, 0.0],
        };
        let (obj, _) =
            attack_objective(scorer, vec![vec![1.0, 2.0].into()], vec![1], 0.0, 0.0).unwrap();
        // softmax(1.5, 2, 0): F_1 − F_0 = (e^2 − e^1.5) / (e^1.5 + e^2 + 1)
        let expected = 0.225_889_565_083_959_74;
        assert!((obj.eval(0, &[0.0, 0.0]).unwrap() - expected).abs() < 1e-12);
    }
}
