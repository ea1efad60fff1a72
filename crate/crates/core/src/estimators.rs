//! Zeroth-order gradient estimators.
//!
//! * Coordinate smoothing (CooSGE): `d` central differences per component,
//!   `2d` queries.
//! * Gaussian smoothing (GauSGE): one forward difference along a fresh
//!   `N(0, I)` direction per component, 2 queries.

use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::oracle::ComponentOracle;
use crate::rng::Directions;
use crate::vector::{mean_of, DenseVector};

/// Smallest smoothing parameter ever used (2^-26). Schedules are clamped to it.
pub const MU_FLOOR: f64 = 1.0 / 67_108_864.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// Coordinate-wise central differences.
    #[serde(rename = "CooSGE")]
    Coordinate,
    /// Gaussian random-direction forward differences.
    #[serde(rename = "GauSGE")]
    Gaussian,
}

impl EstimatorKind {
    /// Oracle queries for one component estimate in dimension `d`.
    pub fn queries_per_component(self, d: usize) -> u64 {
        match self {
            EstimatorKind::Coordinate => 2 * d as u64,
            EstimatorKind::Gaussian => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Coordinate => "CooSGE",
            EstimatorKind::Gaussian => "GauSGE",
        }
    }

    /// The default decaying schedule with unit constant: `1/√(d t)` for
    /// CooSGE and `1/(d √t)` for GauSGE.
    pub fn default_schedule(self) -> MuSchedule {
        match self {
            EstimatorKind::Coordinate => MuSchedule::CooDecay(1.0),
            EstimatorKind::Gaussian => MuSchedule::GauDecay(1.0),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = ZoError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coosge" | "coo" | "coordinate" => Ok(EstimatorKind::Coordinate),
            "gausge" | "gau" | "gaussian" => Ok(EstimatorKind::Gaussian),
            _ => Err(ZoError::InvalidConfig(format!("unknown estimator `{s}`"))),
        }
    }
}

/// Smoothing parameter as a function of the 1-based global iteration `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MuSchedule {
    Constant(f64),
    /// `c / √(d t)`
    CooDecay(f64),
    /// `c / (d √t)`
    GauDecay(f64),
}

impl MuSchedule {
    pub fn at(&self, t: u64, d: usize) -> f64 {
        let t = t.max(1) as f64;
        let d = d.max(1) as f64;
        let mu = match *self {
            MuSchedule::Constant(mu) => mu,
            MuSchedule::CooDecay(c) => c / (d * t).sqrt(),
            MuSchedule::GauDecay(c) => c / (d * t.sqrt()),
        };
        mu.max(MU_FLOOR)
    }

    pub fn validate(&self) -> Result<()> {
        let c = match *self {
            MuSchedule::Constant(c) | MuSchedule::CooDecay(c) | MuSchedule::GauDecay(c) => c,
        };
        if c > 0.0 && c.is_finite() {
            Ok(())
        } else {
            Err(ZoError::InvalidConfig(format!(
                "smoothing constant must be positive, got {c}"
            )))
        }
    }
}

impl fmt::Display for MuSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuSchedule::Constant(mu) => write!(f, "{mu}"),
            MuSchedule::CooDecay(c) => write!(f, "{c}/sqrt(d*t)"),
            MuSchedule::GauDecay(c) => write!(f, "{c}/(d*sqrt(t))"),
        }
    }
}

/// Whether per-component estimates fan out over the rayon pool. Without the
/// `parallel` feature both variants run sequentially. Results never depend
/// on this setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub schedule: MuSchedule,
    /// Reuse the same Gaussian directions for the two points of a variance
    /// reduction correction term. Ignored by CooSGE.
    pub shared_directions: bool,
    pub exec: Exec,
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorConfig {
            kind,
            schedule: kind.default_schedule(),
            shared_directions: true,
            exec: Exec::default(),
        }
    }

    pub fn with_schedule(mut self, schedule: MuSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_shared_directions(mut self, shared: bool) -> Self {
        self.shared_directions = shared;
        self
    }

    /// Estimator settings for global iteration `t` in dimension `d`.
    pub fn at(&self, t: u64, d: usize) -> Estimator {
        Estimator {
            kind: self.kind,
            mu: self.schedule.at(t, d),
            exec: self.exec,
        }
    }
}

/// An estimator with its smoothing parameter fixed for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimator {
    pub kind: EstimatorKind,
    pub mu: f64,
    pub exec: Exec,
}

impl Estimator {
    pub fn new(kind: EstimatorKind, mu: f64) -> Self {
        Estimator {
            kind,
            mu,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    /// One estimate per listed index, in list order. The `k`-th entry uses
    /// direction `k` of `dirs` under GauSGE.
    pub fn components<O: ComponentOracle + ?Sized>(
        &self,
        oracle: &O,
        indices: &[usize],
        x: &[f64],
        dirs: &Directions,
    ) -> Result<Vec<DenseVector>> {
        check_point(oracle, x)?;
        let n = oracle.num_components();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(ZoError::InvalidConfig(format!(
                "component index {bad} out of range for n = {n}"
            )));
        }
        let one = |(k, &i): (usize, &usize)| -> Result<DenseVector> {
            match self.kind {
                EstimatorKind::Coordinate => coosge_component(oracle, i, x, self.mu),
                EstimatorKind::Gaussian => {
                    let u = dirs.direction(k, x.len());
                    gausge_component(oracle, i, x, self.mu, &u)
                }
            }
        };
        match self.exec {
            #[cfg(feature = "parallel")]
            Exec::Parallel if worth_splitting(indices.len(), self.kind, x.len()) => {
                indices.par_iter().enumerate().map(one).collect()
            }
            _ => indices.iter().enumerate().map(one).collect(),
        }
    }
}

/// Mean of the per-index estimates over `indices`.
pub fn estimate_minibatch<O: ComponentOracle + ?Sized>(
    oracle: &O,
    indices: &[usize],
    x: &[f64],
    est: &Estimator,
    dirs: &Directions,
) -> Result<DenseVector> {
    if indices.is_empty() {
        return Err(ZoError::InvalidBatch {
            batch: 0,
            n: oracle.num_components(),
        });
    }
    let parts = est.components(oracle, indices, x, dirs)?;
    Ok(mean_of(&parts, x.len()))
}

/// Estimate of the full average gradient, all `n` components in order.
pub fn estimate_full<O: ComponentOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    est: &Estimator,
    dirs: &Directions,
) -> Result<DenseVector> {
    let all: Vec<usize> = (0..oracle.num_components()).collect();
    estimate_minibatch(oracle, &all, x, est, dirs)
}

/// Central-difference estimate of `∇f_i(x)` with uniform step `mu`.
pub fn coosge_component<O: ComponentOracle + ?Sized>(
    oracle: &O,
    i: usize,
    x: &[f64],
    mu: f64,
) -> Result<DenseVector> {
    check_mu(mu)?;
    let mut probe = x.to_vec();
    let mut grad = DenseVector::zeros(x.len());
    for j in 0..x.len() {
        let xj = x[j];
        probe[j] = xj + mu;
        let plus = finite(oracle.eval(i, &probe)?, i, Some(j))?;
        probe[j] = xj - mu;
        let minus = finite(oracle.eval(i, &probe)?, i, Some(j))?;
        probe[j] = xj;
        grad[j] = (plus - minus) / (2.0 * mu);
    }
    Ok(grad)
}

/// Forward-difference estimate of `∇f_i(x)` along direction `u`.
pub fn gausge_component<O: ComponentOracle + ?Sized>(
    oracle: &O,
    i: usize,
    x: &[f64],
    mu: f64,
    u: &[f64],
) -> Result<DenseVector> {
    check_mu(mu)?;
    if u.len() != x.len() {
        return Err(ZoError::Dimension {
            expected: x.len(),
            found: u.len(),
        });
    }
    let shifted: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + mu * b).collect();
    let ahead = finite(oracle.eval(i, &shifted)?, i, None)?;
    let here = finite(oracle.eval(i, x)?, i, None)?;
    let coef = (ahead - here) / mu;
    Ok(u.iter().map(|v| coef * v).collect())
}

/// Rough work estimate (queries × dimension) below which a fan-out costs
/// more than it saves.
#[cfg(feature = "parallel")]
fn worth_splitting(count: usize, kind: EstimatorKind, d: usize) -> bool {
    const MIN_WORK: u64 = 1 << 14;
    count > 1 && count as u64 * kind.queries_per_component(d) * d as u64 >= MIN_WORK
}

fn check_mu(mu: f64) -> Result<()> {
    if mu >= MU_FLOOR && mu.is_finite() {
        Ok(())
    } else {
        Err(ZoError::InvalidConfig(format!(
            "smoothing parameter {mu} is below the floor {MU_FLOOR}"
        )))
    }
}

fn check_point<O: ComponentOracle + ?Sized>(oracle: &O, x: &[f64]) -> Result<()> {
    if x.len() != oracle.dim() {
        return Err(ZoError::Dimension {
            expected: oracle.dim(),
            found: x.len(),
        });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(ZoError::InvalidConfig(
            "point has non-finite entries".into(),
        ));
    }
    Ok(())
}

#[inline]
fn finite(v: f64, component: usize, coordinate: Option<usize>) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ZoError::NonFiniteValue {
            component,
            coordinate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{CountingOracle, FnOracle};
    use crate::rng::{DirectionTag, RandomSource};

    fn dirs() -> Directions {
        RandomSource::new(11).directions(DirectionTag::new(0, 1))
    }

    #[test]
    fn coosge_exact_on_quadratic_plus_linear() {
        let o = CountingOracle::new(FnOracle::new(1, 2, |_, x: &[f64]| x[0] * x[0] + 3.0 * x[1]));
        let g = coosge_component(&o, 0, &[2.0, 1.0], 0.1).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-12 && (g[1] - 3.0).abs() < 1e-12);
        assert_eq!(o.queries(), 4);
    }

    #[test]
    fn coosge_constant_is_zero() {
        let o = FnOracle::new(1, 3, |_, _: &[f64]| 7.5);
        let g = coosge_component(&o, 0, &[1.0, -4.0, 9.0], 0.37).unwrap();
        assert_eq!(&g[..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn coosge_exponential() {
        // (e^0.5 − e^−0.5)/(2·0.5) = sinh(0.5)/0.5
        let o = FnOracle::new(1, 1, |_, x: &[f64]| x[0].exp());
        let g = coosge_component(&o, 0, &[0.0], 0.5).unwrap();
        assert!((g[0] - 1.042_190_610_987_495).abs() < 1e-12, "{}", g[0]);
    }

    #[test]
    fn gausge_linear_is_exact_along_direction() {
        let o = CountingOracle::new(FnOracle::new(1, 2, |_, x: &[f64]| 2.0 * x[0] - x[1]));
        let g = gausge_component(&o, 0, &[0.0, 0.0], 0.1, &[1.0, 1.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        assert_eq!(o.queries(), 2);
    }

    #[test]
    fn gausge_half_norm_squared() {
        let o = FnOracle::new(1, 2, |_, x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let g = gausge_component(&o, 0, &[1.0, 0.0], 0.1, &[1.0, 1.0]).unwrap();
        assert!((g[0] - 1.1).abs() < 1e-12 && (g[1] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn gausge_quartic() {
        // ((1.001)^4 − 1)/0.001 = 4.006004001
        let o = FnOracle::new(1, 1, |_, x: &[f64]| x[0].powi(4));
        let g = gausge_component(&o, 0, &[1.0], 1e-3, &[1.0]).unwrap();
        assert!((g[0] - 4.006_004_001).abs() < 1e-8);
        assert!((g[0] - 4.0).abs() < 1e-2);
    }

    #[test]
    fn non_finite_values_carry_location() {
        let o = FnOracle::new(
            2,
            3,
            |_, x: &[f64]| if x[2] > 0.5 { f64::INFINITY } else { 0.0 },
        );
        let err = coosge_component(&o, 1, &[0.0, 0.0, 0.0], 1.0).unwrap_err();
        assert!(matches!(
            err,
            ZoError::NonFiniteValue {
                component: 1,
                coordinate: Some(2)
            }
        ));
        let err = gausge_component(&o, 1, &[0.0, 0.0, 0.0], 1.0, &[0.0, 0.0, 1.0]).unwrap_err();
        assert!(matches!(
            err,
            ZoError::NonFiniteValue {
                component: 1,
                coordinate: None
            }
        ));
    }

    #[test]
    fn mu_below_floor_is_rejected() {
        let o = FnOracle::new(1, 1, |_, x: &[f64]| x[0]);
        assert!(coosge_component(&o, 0, &[0.0], MU_FLOOR / 2.0).is_err());
        assert!(coosge_component(&o, 0, &[0.0], MU_FLOOR).is_ok());
    }

    #[test]
    fn schedules() {
        assert_eq!(MuSchedule::CooDecay(1.0).at(4, 25), 0.1);
        assert_eq!(MuSchedule::GauDecay(1.0).at(4, 10), 0.05);
        assert_eq!(MuSchedule::Constant(0.3).at(100, 7), 0.3);
        assert_eq!(MuSchedule::CooDecay(1.0).at(u64::MAX, 1 << 20), MU_FLOOR);
        assert_eq!(MuSchedule::Constant(1e-12).at(1, 1), MU_FLOOR);
        assert!(MuSchedule::Constant(0.0).validate().is_err());
    }

    #[test]
    fn minibatch_ledger_and_singletons() {
        let quad = |i: usize, x: &[f64]| (i as f64 + 1.0) * x[0] * x[0] + x[1] * i as f64;
        let o = CountingOracle::new(FnOracle::new(4, 2, quad));
        let x = [0.5, -1.0];
        for kind in [EstimatorKind::Coordinate, EstimatorKind::Gaussian] {
            o.reset();
            let est = Estimator::new(kind, 0.01);
            let single = estimate_minibatch(&o, &[2], &x, &est, &dirs()).unwrap();
            let direct = match kind {
                EstimatorKind::Coordinate => coosge_component(&o, 2, &x, 0.01).unwrap(),
                EstimatorKind::Gaussian => {
                    gausge_component(&o, 2, &x, 0.01, &dirs().direction(0, 2)).unwrap()
                }
            };
            assert_eq!(single, direct);
            o.reset();
            estimate_minibatch(&o, &[0, 3, 3], &x, &est, &dirs()).unwrap();
            assert_eq!(o.queries(), 3 * kind.queries_per_component(2));
            o.reset();
            estimate_full(&o, &x, &est, &dirs()).unwrap();
            assert_eq!(o.queries(), 4 * kind.queries_per_component(2));
        }
    }

    #[test]
    fn identical_components_average_to_either() {
        let o = FnOracle::new(2, 2, |_, x: &[f64]| x[0] * x[1] + x[0]);
        let est = Estimator::new(EstimatorKind::Coordinate, 0.1);
        let g = estimate_minibatch(&o, &[0, 1], &[1.0, 2.0], &est, &dirs()).unwrap();
        let c = coosge_component(&o, 0, &[1.0, 2.0], 0.1).unwrap();
        assert_eq!(g, c);
    }

    #[test]
    fn three_quadratics_average() {
        // f_i(x) = ½ w_i ‖x‖² + c_i·x ⇒ ∇f_i = w_i x + c_i
        let w = [1.0, 2.5, -0.5];
        let c = [[0.1, 0.2], [-1.0, 0.0], [0.3, 3.0]];
        let o = FnOracle::new(3, 2, move |i, x: &[f64]| {
            0.5 * w[i] * (x[0] * x[0] + x[1] * x[1]) + c[i][0] * x[0] + c[i][1] * x[1]
        });
        let x = [0.4, -1.2];
        let est = Estimator::new(EstimatorKind::Coordinate, 0.05);
        let g = estimate_minibatch(&o, &[0, 1, 2], &x, &est, &dirs()).unwrap();
        for j in 0..2 {
            let exact = (0..3).map(|i| w[i] * x[j] + c[i][j]).sum::<f64>() / 3.0;
            assert!((g[j] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let o = FnOracle::new(64, 5, |i, x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(j, v)| ((i + j) as f64 * v).sin())
                .sum::<f64>()
        });
        let x = [0.3, -0.2, 1.0, 0.0, 2.0];
        let idx: Vec<usize> = (0..64).rev().collect();
        for kind in [EstimatorKind::Coordinate, EstimatorKind::Gaussian] {
            let par = Estimator::new(kind, 1e-3).with_exec(Exec::Parallel);
            let seq = par.with_exec(Exec::Sequential);
            assert_eq!(
                estimate_minibatch(&o, &idx, &x, &par, &dirs()).unwrap(),
                estimate_minibatch(&o, &idx, &x, &seq, &dirs()).unwrap()
            );
        }
    }

    #[test]
    fn empty_batch_and_bad_index() {
        let o = FnOracle::new(2, 1, |_, x: &[f64]| x[0]);
        let est = Estimator::new(EstimatorKind::Coordinate, 0.1);
        assert!(estimate_minibatch(&o, &[], &[0.0], &est, &dirs()).is_err());
        assert!(estimate_minibatch(&o, &[2], &[0.0], &est, &dirs()).is_err());
    }
}
