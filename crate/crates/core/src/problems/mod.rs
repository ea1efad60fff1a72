//! Built-in objectives: black-box sigmoid-loss classification, the
//! elastic-net attack objective over an external scorer, and analytic
//! synthetic problems used to check estimators and solvers.

mod attack;
mod classification;
mod synthetic;

pub use attack::{attack_objective, AttackObjective, ExternalScorer, Scorer, SoftmaxLinearScorer};
pub use classification::{sigmoid_loss, test_loss, ClassificationProblem, SparseFeatures};
pub use synthetic::{
    check_gradient, synthetic_classification, LogSumExpComponent, LogSumExpProblem,
    QuadraticComponent, QuadraticProblem,
};

use crate::oracle::ComponentOracle;
use crate::vector::DenseVector;

/// A problem whose smooth part has a known gradient. Used as a reference
/// when checking estimators and for exact gradient-mapping reports.
pub trait SmoothProblem: ComponentOracle {
    fn component_gradient(&self, i: usize, x: &[f64]) -> DenseVector;

    /// `∇f(x) = (1/n) Σ ∇f_i(x)`
    fn gradient(&self, x: &[f64]) -> DenseVector {
        let n = self.num_components();
        let mut g = DenseVector::zeros(x.len());
        for i in 0..n {
            g.axpy(1.0, &self.component_gradient(i, x));
        }
        g.scale(1.0 / n as f64);
        g
    }

    /// Upper bound on the Lipschitz constant of every `∇f_i`.
    fn lipschitz(&self) -> f64;
}
