use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::SmoothProblem;
use crate::data::{Dataset, LabelMapping, Row};
use crate::error::{Result, ZoError};
use crate::oracle::ComponentOracle;
use crate::rng::{standard_normal_vector, Purpose, RandomSource};
use crate::vector::{dot, norm_sq, DenseVector};

/// `f_i(x) = ½ xᵀ A x + cᵀx`
#[derive(Debug, Clone)]
pub struct QuadraticComponent {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
}

/// Average of quadratic components with analytic gradients.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    d: usize,
    components: Vec<QuadraticComponent>,
    lipschitz: f64,
}

impl QuadraticProblem {
    /// Each `A` must be symmetric positive semidefinite.
    pub fn new(components: Vec<QuadraticComponent>) -> Result<Self> {
        let d = components.first().map_or(0, |c| c.c.len());
        if components.is_empty() || d == 0 {
            return Err(ZoError::EmptyDataset);
        }
        let mut lipschitz: f64 = 0.0;
        for (i, q) in components.iter().enumerate() {
            if q.a.nrows() != d || q.a.ncols() != d || q.c.len() != d {
                return Err(ZoError::Dimension {
                    expected: d,
                    found: q.a.nrows(),
                });
            }
            if (&q.a - q.a.transpose()).amax() > 1e-12 * (1.0 + q.a.amax()) {
                return Err(ZoError::InvalidConfig(format!(
                    "component {i}: A is not symmetric"
                )));
            }
            let eig = SymmetricEigen::new(q.a.clone()).eigenvalues;
            if eig.min() < -1e-10 * (1.0 + eig.amax()) {
                return Err(ZoError::InvalidConfig(format!(
                    "component {i}: A is not PSD"
                )));
            }
            lipschitz = lipschitz.max(eig.max());
        }
        let p = QuadraticProblem {
            d,
            components,
            lipschitz,
        };
        check_gradient(&p, 0)?;
        Ok(p)
    }

    /// `n` components with `A_i = B_i B_iᵀ / d` (Gaussian `B_i`) and
    /// Gaussian `c_i`.
    pub fn random(n: usize, d: usize, seed: u64) -> Result<Self> {
        let mut rng = RandomSource::new(seed).stream(Purpose::Synthetic, 1, 0);
        let components = (0..n)
            .map(|_| {
                let b = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
                QuadraticComponent {
                    a: &b * b.transpose() / d as f64,
                    c: DVector::from_fn(d, |_, _| rng.sample(StandardNormal)),
                }
            })
            .collect();
        QuadraticProblem::new(components)
    }

    pub fn components(&self) -> &[QuadraticComponent] {
        &self.components
    }
}

impl ComponentOracle for QuadraticProblem {
    fn num_components(&self) -> usize {
        self.components.len()
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        let q = &self.components[i];
        let x = DVector::from_column_slice(x);
        Ok(0.5 * x.dot(&(&q.a * &x)) + q.c.dot(&x))
    }
}

impl SmoothProblem for QuadraticProblem {
    fn component_gradient(&self, i: usize, x: &[f64]) -> DenseVector {
        let q = &self.components[i];
        let g = &q.a * DVector::from_column_slice(x) + &q.c;
        g.as_slice().into()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// `f_i(x) = τ log Σ_k exp((r_k·x + s_k) / τ)`
#[derive(Debug, Clone)]
pub struct LogSumExpComponent {
    pub rows: Vec<DenseVector>,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LogSumExpProblem {
    d: usize,
    temperature: f64,
    components: Vec<LogSumExpComponent>,
    lipschitz: f64,
}

impl LogSumExpProblem {
    /// The Lipschitz bound is `max_i ‖R_i‖₂² / τ`, from
    /// `∇²f_i = Rᵀ(diag p − ppᵀ)R / τ` and `diag p − ppᵀ ⪯ I`.
    pub fn new(temperature: f64, components: Vec<LogSumExpComponent>) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(ZoError::InvalidConfig(
                "temperature must be positive".into(),
            ));
        }
        let d = components
            .first()
            .and_then(|c| c.rows.first())
            .map_or(0, |r| r.dim());
        if d == 0 {
            return Err(ZoError::EmptyDataset);
        }
        let mut lipschitz: f64 = 0.0;
        for c in &components {
            if c.rows.is_empty() || c.rows.len() != c.offsets.len() {
                return Err(ZoError::InvalidConfig(
                    "each component needs rows and offsets".into(),
                ));
            }
            for r in &c.rows {
                r.check_dim(d)?;
            }
            let r = DMatrix::from_fn(c.rows.len(), d, |k, j| c.rows[k][j]);
            let gram = r.transpose() * &r;
            lipschitz = lipschitz.max(SymmetricEigen::new(gram).eigenvalues.max() / temperature);
        }
        let p = LogSumExpProblem {
            d,
            temperature,
            components,
            lipschitz,
        };
        check_gradient(&p, 0)?;
        Ok(p)
    }

    /// `n` components of `k` Gaussian rows each, unit temperature.
    pub fn random(n: usize, d: usize, k: usize, seed: u64) -> Result<Self> {
        let mut rng = RandomSource::new(seed).stream(Purpose::Synthetic, 2, 0);
        let components = (0..n)
            .map(|_| LogSumExpComponent {
                rows: (0..k)
                    .map(|_| standard_normal_vector(&mut rng, d))
                    .collect(),
                offsets: (0..k).map(|_| rng.sample(StandardNormal)).collect(),
            })
            .collect();
        LogSumExpProblem::new(1.0, components)
    }

    fn logits(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let c = &self.components[i];
        c.rows
            .iter()
            .zip(&c.offsets)
            .map(|(r, s)| (dot(r, x) + s) / self.temperature)
            .collect()
    }
}

impl ComponentOracle for LogSumExpProblem {
    fn num_components(&self) -> usize {
        self.components.len()
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        let z = self.logits(i, x);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = z.iter().map(|v| (v - m).exp()).sum();
        Ok(self.temperature * (m + s.ln()))
    }
}

impl SmoothProblem for LogSumExpProblem {
    fn component_gradient(&self, i: usize, x: &[f64]) -> DenseVector {
        let z = self.logits(i, x);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut g = DenseVector::zeros(self.d);
        for (r, wk) in self.components[i].rows.iter().zip(&w) {
            g.axpy(wk / total, r);
        }
        g
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Compares the analytic gradient against central differences at 10 random
/// points; fails if any relative error exceeds 1e-6.
pub fn check_gradient<P: SmoothProblem + ?Sized>(problem: &P, seed: u64) -> Result<()> {
    let d = problem.dim();
    let n = problem.num_components();
    let mut rng = RandomSource::new(seed).stream(Purpose::Test, 0xC4EC, 0);
    let h = 1e-5;
    for _ in 0..10 {
        let x = standard_normal_vector(&mut rng, d);
        let i = rng.random_range(0..n);
        let exact = problem.component_gradient(i, &x);
        let mut probe = x.clone();
        let mut err = 0.0;
        for j in 0..d {
            probe[j] = x[j] + h;
            let plus = problem.eval(i, &probe)?;
            probe[j] = x[j] - h;
            let minus = problem.eval(i, &probe)?;
            probe[j] = x[j];
            err += ((plus - minus) / (2.0 * h) - exact[j]).powi(2);
        }
        let scale = norm_sq(&exact).sqrt().max(1.0);
        if err.sqrt() > 1e-6 * scale {
            return Err(ZoError::InvalidConfig(format!(
                "analytic gradient of component {i} disagrees with finite differences ({:e})",
                err.sqrt() / scale
            )));
        }
    }
    Ok(())
}

/// Binary classification data with Gaussian features scaled by `1/√d`,
/// labels from a random linear separator, and 10% label noise. Labels are
/// already ±1.
pub fn synthetic_classification(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(ZoError::EmptyDataset);
    }
    let mut rng = RandomSource::new(seed).stream(Purpose::Synthetic, 3, 0);
    let truth = standard_normal_vector(&mut rng, d);
    let scale = 1.0 / (d as f64).sqrt();
    let rows = (0..n)
        .map(|_| {
            let mut a = standard_normal_vector(&mut rng, d);
            a.scale(scale);
            let mut label = if dot(&a, &truth) >= 0.0 { 1.0 } else { -1.0 };
            if rng.random_bool(0.1) {
                label = -label;
            }
            Row {
                label,
                features: a
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| (j as u32 + 1, v))
                    .collect(),
            }
        })
        .collect();
    Ok(Dataset {
        rows,
        d,
        label_mapping: LabelMapping::Identity,
    })
}
