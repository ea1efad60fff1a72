//! Separable convex regularizers and their proximal maps.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::vector::DenseVector;

/// The nonsmooth term `ψ`. The squared-ℓ2 weight multiplies `Σ x_j²`
/// directly (no ½ factor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Regularizer {
    #[default]
    None,
    L1(f64),
    SquaredL2(f64),
    ElasticNet {
        l1: f64,
        l2: f64,
    },
}

impl Regularizer {
    /// Builds the cheapest equivalent variant for the given weights.
    pub fn elastic_net(l1: f64, l2: f64) -> Result<Self> {
        if !(l1 >= 0.0 && l2 >= 0.0) || !l1.is_finite() || !l2.is_finite() {
            return Err(ZoError::InvalidConfig(format!(
                "regularization weights must be finite and non-negative, got ({l1}, {l2})"
            )));
        }
        Ok(match (l1 > 0.0, l2 > 0.0) {
            (false, false) => Regularizer::None,
            (true, false) => Regularizer::L1(l1),
            (false, true) => Regularizer::SquaredL2(l2),
            (true, true) => Regularizer::ElasticNet { l1, l2 },
        })
    }

    /// `(λ1, λ2)`
    pub fn weights(&self) -> (f64, f64) {
        match *self {
            Regularizer::None => (0.0, 0.0),
            Regularizer::L1(l1) => (l1, 0.0),
            Regularizer::SquaredL2(l2) => (0.0, l2),
            Regularizer::ElasticNet { l1, l2 } => (l1, l2),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (l1, l2) = self.weights();
        let mut v = 0.0;
        if l1 != 0.0 {
            v += l1 * x.iter().map(|c| c.abs()).sum::<f64>();
        }
        if l2 != 0.0 {
            v += l2 * x.iter().map(|c| c * c).sum::<f64>();
        }
        v
    }

    /// Scalar proximal map for one coordinate.
    #[inline]
    pub fn prox_scalar(&self, eta: f64, v: f64) -> f64 {
        let (l1, l2) = self.weights();
        soft_threshold(v, eta * l1) / (1.0 + 2.0 * eta * l2)
    }

    /// `argmin_y ψ(y) + ‖y − x‖² / (2η)`
    pub fn prox(&self, eta: f64, x: &[f64]) -> Result<DenseVector> {
        let mut out = DenseVector::from(x);
        self.prox_in_place(eta, &mut out)?;
        Ok(out)
    }

    pub fn prox_in_place(&self, eta: f64, x: &mut [f64]) -> Result<()> {
        check_step(eta)?;
        if matches!(self, Regularizer::None) {
            return Ok(());
        }
        for v in x.iter_mut() {
            *v = self.prox_scalar(eta, *v);
        }
        Ok(())
    }

    /// `g_η(x) = (x − prox(x − η·grad)) / η`
    pub fn gradient_mapping(&self, eta: f64, x: &[f64], grad: &[f64]) -> Result<DenseVector> {
        check_step(eta)?;
        if x.len() != grad.len() {
            return Err(ZoError::Dimension {
                expected: x.len(),
                found: grad.len(),
            });
        }
        Ok(x.iter()
            .zip(grad)
            .map(|(&xi, &gi)| (xi - self.prox_scalar(eta, xi - eta * gi)) / eta)
            .collect())
    }
}

fn check_step(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(ZoError::InvalidStep(eta))
    }
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
