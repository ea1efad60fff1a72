use super::SmoothProblem;
use crate::data::Dataset;
use crate::error::{Result, ZoError};
use crate::oracle::ComponentOracle;
use crate::vector::DenseVector;

/// Exponent clamp for the sigmoid. `e^±500` is finite and the loss is
/// already indistinguishable from its limits.
const EXP_CLAMP: f64 = 500.0;

/// `1 / (1 + e^m)` for margin `m = l·⟨a, x⟩`.
#[inline]
pub fn sigmoid_loss(margin: f64) -> f64 {
    1.0 / (1.0 + margin.clamp(-EXP_CLAMP, EXP_CLAMP).exp())
}

/// Sparse feature vector with 0-based, strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseFeatures {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseFeatures {
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Self {
        SparseFeatures { indices, values }
    }

    pub fn from_dense(v: &[f64]) -> Self {
        let (indices, values) = v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(j, &x)| (j as u32, x))
            .unzip();
        SparseFeatures { indices, values }
    }

    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&j, v)| v * x[j as usize])
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Binary classification with the nonconvex sigmoid loss
/// `f_i(x) = 1 / (1 + exp(l_i ⟨a_i, x⟩))`.
#[derive(Debug, Clone)]
pub struct ClassificationProblem {
    d: usize,
    features: Vec<SparseFeatures>,
    labels: Vec<f64>,
}

impl ClassificationProblem {
    pub fn new(d: usize, samples: Vec<(SparseFeatures, f64)>) -> Result<Self> {
        let mut features = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for (i, (a, l)) in samples.into_iter().enumerate() {
            if l != 1.0 && l != -1.0 {
                return Err(ZoError::Label(format!(
                    "sample {i} has label {l}, expected ±1"
                )));
            }
            if a.indices.len() != a.values.len() || a.indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ZoError::InvalidConfig(format!(
                    "sample {i}: feature indices must be strictly increasing"
                )));
            }
            if let Some(&j) = a.indices.last() {
                if j as usize >= d {
                    return Err(ZoError::Dimension {
                        expected: d,
                        found: j as usize + 1,
                    });
                }
            }
            features.push(a);
            labels.push(l);
        }
        Ok(ClassificationProblem {
            d,
            features,
            labels,
        })
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        let features = ds
            .rows
            .iter()
            .map(|r| {
                SparseFeatures::new(
                    r.features.iter().map(|&(j, _)| j - 1).collect(),
                    r.features.iter().map(|&(_, v)| v).collect(),
                )
            })
            .collect();
        ClassificationProblem {
            d: ds.d,
            features,
            labels: ds.rows.iter().map(|r| r.label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self, i: usize) -> &SparseFeatures {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    #[inline]
    pub fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.labels[i] * self.features[i].dot(x)
    }

    /// `max_i ‖a_i‖² / 4`
    pub fn lipschitz_bound(&self) -> f64 {
        self.features
            .iter()
            .map(SparseFeatures::norm_sq)
            .fold(0.0, f64::max)
            / 4.0
    }

    /// Mean loss over all samples.
    pub fn mean_loss(&self, x: &[f64]) -> Result<f64> {
        test_loss(self, x)
    }
}

/// Mean sigmoid loss over a held-out set, no regularizer.
pub fn test_loss(problem: &ClassificationProblem, x: &[f64]) -> Result<f64> {
    if problem.is_empty() {
        return Err(ZoError::EmptyDataset);
    }
    if x.len() != problem.d {
        return Err(ZoError::Dimension {
            expected: problem.d,
            found: x.len(),
        });
    }
    let total: f64 = (0..problem.len())
        .map(|i| sigmoid_loss(problem.margin(i, x)))
        .sum();
    Ok(total / problem.len() as f64)
}

impl ComponentOracle for ClassificationProblem {
    fn num_components(&self) -> usize {
        self.labels.len()
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
        Ok(sigmoid_loss(self.margin(i, x)))
    }
}

impl SmoothProblem for ClassificationProblem {
    fn component_gradient(&self, i: usize, x: &[f64]) -> DenseVector {
        // d/dm (1/(1+e^m)) = −f(1−f)
        let f = sigmoid_loss(self.margin(i, x));
        let scale = -f * (1.0 - f) * self.labels[i];
        let mut g = DenseVector::zeros(self.d);
        let a = &self.features[i];
        for (&j, v) in a.indices.iter().zip(&a.values) {
            g[j as usize] = scale * v;
        }
        g
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz_bound()
    }
}
