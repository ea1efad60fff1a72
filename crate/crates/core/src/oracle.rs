//! Black-box access to the smooth components `f_i`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Result, ZoError};
use crate::prox::Regularizer;

/// Value oracle for the components of `f(x) = (1/n) Σ f_i(x)`.
///
/// Indices are 0-based. Implementations must be deterministic and safe to
/// call concurrently; solvers never see anything but `eval`.
pub trait ComponentOracle: Send + Sync {
    /// Number of components `n`.
    fn num_components(&self) -> usize;

    /// Dimension `d` of the decision variable.
    fn dim(&self) -> usize;

    fn eval(&self, i: usize, x: &[f64]) -> Result<f64>;
}

impl<O: ComponentOracle + ?Sized> ComponentOracle for &O {
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        (**self).eval(i, x)
    }
}

impl<O: ComponentOracle + ?Sized> ComponentOracle for Box<O> {
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        (**self).eval(i, x)
    }
}

/// Oracle backed by a closure `(i, x) -> f_i(x)`.
pub struct FnOracle<F> {
    n: usize,
    d: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(usize, &[f64]) -> f64 + Send + Sync,
{
    pub fn new(n: usize, d: usize, f: F) -> Self {
        FnOracle { n, d, f }
    }
}

impl<F> ComponentOracle for FnOracle<F>
where
    F: Fn(usize, &[f64]) -> f64 + Send + Sync,
{
    fn num_components(&self) -> usize {
        self.n
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        Ok((self.f)(i, x))
    }
}

/// Counts every `eval` call made through it.
pub struct CountingOracle<O> {
    inner: O,
    queries: AtomicU64,
}

impl<O: ComponentOracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        CountingOracle {
            inner,
            queries: AtomicU64::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: ComponentOracle> ComponentOracle for CountingOracle<O> {
    fn num_components(&self) -> usize {
        self.inner.num_components()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(i, x)
    }
}

/// Memoizes every `(i, x)` it sees and panics if a repeated query returns
/// a different value. Only meant for tests of user-supplied oracles.
pub struct PurityCheckedOracle<O> {
    inner: O,
    seen: Mutex<HashMap<(usize, Vec<u64>), u64>>,
}

impl<O: ComponentOracle> PurityCheckedOracle<O> {
    pub fn new(inner: O) -> Self {
        PurityCheckedOracle {
            inner,
            seen: Mutex::new(HashMap::new()),
        }
    }

    /// Number of distinct `(i, x)` pairs observed.
    pub fn distinct_queries(&self) -> usize {
        self.seen.lock().unwrap().len()
    }
}

impl<O: ComponentOracle> ComponentOracle for PurityCheckedOracle<O> {
    fn num_components(&self) -> usize {
        self.inner.num_components()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        let v = self.inner.eval(i, x)?;
        let key = (i, x.iter().map(|c| c.to_bits()).collect::<Vec<_>>());
        let mut seen = self.seen.lock().unwrap();
        if let Some(prev) = seen.insert(key, v.to_bits()) {
            assert_eq!(
                prev,
                v.to_bits(),
                "oracle is not pure: component {i} returned {} then {v}",
                f64::from_bits(prev)
            );
        }
        Ok(v)
    }
}

/// `F(x) = (1/n) Σ f_i(x) + ψ(x)`, costing exactly `n` queries.
pub fn full_function_value<O: ComponentOracle + ?Sized>(
    oracle: &O,
    reg: &Regularizer,
    x: &[f64],
) -> Result<f64> {
    Ok(smooth_value(oracle, x)? + reg.value(x))
}

/// `f(x) = (1/n) Σ f_i(x)` without the regularizer.
pub fn smooth_value<O: ComponentOracle + ?Sized>(oracle: &O, x: &[f64]) -> Result<f64> {
    let d = oracle.dim();
    if x.len() != d {
        return Err(ZoError::Dimension {
            expected: d,
            found: x.len(),
        });
    }
    let n = oracle.num_components();
    if n == 0 {
        return Err(ZoError::EmptyDataset);
    }
    let mut sum = 0.0;
    for i in 0..n {
        let v = oracle.eval(i, x)?;
        if !v.is_finite() {
            return Err(ZoError::NonFiniteValue {
                component: i,
                coordinate: None,
            });
        }
        sum += v;
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_square_component() {
        let o = CountingOracle::new(FnOracle::new(1, 1, |_, x: &[f64]| x[0] * x[0]));
        let v = full_function_value(&o, &Regularizer::None, &[3.0]).unwrap();
        assert_eq!(v, 9.0);
        assert_eq!(o.queries(), 1);
    }

    #[test]
    fn regularizer_only() {
        let o = CountingOracle::new(FnOracle::new(2, 2, |_, _: &[f64]| 0.0));
        let v = full_function_value(&o, &Regularizer::L1(1.0), &[1.0, -2.0]).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(o.queries(), 2);
    }

    #[test]
    fn non_finite_component_is_reported() {
        let o = FnOracle::new(3, 1, |i, _: &[f64]| if i == 2 { f64::NAN } else { 1.0 });
        let err = full_function_value(&o, &Regularizer::None, &[0.0]).unwrap_err();
        assert!(matches!(
            err,
            ZoError::NonFiniteValue {
                component: 2,
                coordinate: None
            }
        ));
    }

    #[test]
    fn dimension_is_checked() {
        let o = FnOracle::new(1, 2, |_, _: &[f64]| 0.0);
        assert!(matches!(
            full_function_value(&o, &Regularizer::None, &[0.0]),
            Err(ZoError::Dimension {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn purity_check_accepts_deterministic_oracle() {
        let o = PurityCheckedOracle::new(FnOracle::new(2, 1, |i, x: &[f64]| i as f64 + x[0]));
        for _ in 0..3 {
            o.eval(0, &[1.0]).unwrap();
            o.eval(1, &[1.0]).unwrap();
        }
        assert_eq!(o.distinct_queries(), 2);
    }

    #[test]
    #[should_panic(expected = "not pure")]
    fn purity_check_catches_stateful_oracle() {
        let calls = AtomicU64::new(0);
        let o = PurityCheckedOracle::new(FnOracle::new(1, 1, move |_, _: &[f64]| {
            calls.fetch_add(1, Ordering::Relaxed) as f64
        }));
        o.eval(0, &[1.0]).unwrap();
        o.eval(0, &[1.0]).unwrap();
    }
}
