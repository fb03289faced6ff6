//! Objectives over binary vectors and exact enumeration oracles.
//!
//! Everything here sums over all `2^V` configurations, so it is only usable
//! for small `V`; it is the ground truth the stochastic estimators are
//! checked against.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, ArmError, Result};
use crate::estimators::{Estimator, EstimatorKind};
use crate::rng::RngStream;
use crate::sampling::{logistic, LogitVector};
use crate::stats::{Moments, SampleMatrix};

/// Largest arity the enumeration oracles accept.
pub const MAX_ENUMERATION_ARITY: usize = 20;

/// A real-valued function of a binary vector.
///
/// Implementors may also carry side parameters `ψ` with a pathwise gradient;
/// the default has none.
pub trait Objective {
    fn arity(&self) -> usize;

    fn eval(&self, z: &[u8]) -> f64;

    fn psi_len(&self) -> usize {
        0
    }

    /// `∇_ψ f(z; ψ)`, when the objective has side parameters.
    fn grad_psi(&self, _z: &[u8]) -> Option<Vec<f64>> {
        None
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn eval(&self, z: &[u8]) -> f64 {
        (**self).eval(z)
    }
    fn psi_len(&self) -> usize {
        (**self).psi_len()
    }
    fn grad_psi(&self, z: &[u8]) -> Option<Vec<f64>> {
        (**self).grad_psi(z)
    }
}

/// Index of `z` in a little-endian table: bit `v` has weight `2^v`.
#[inline]
pub fn table_index(z: &[u8]) -> usize {
    z.iter().enumerate().fold(0, |acc, (v, &b)| acc | ((b as usize) << v))
}

/// Objective stored as a table of `2^V` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableObjective {
    arity: usize,
    values: Vec<f64>,
}

impl TableObjective {
    pub fn new(arity: usize, values: Vec<f64>) -> Result<Self> {
        if arity == 0 || arity > MAX_ENUMERATION_ARITY {
            return Err(ArmError::Budget {
                arity,
                max: MAX_ENUMERATION_ARITY,
            });
        }
        check_len(1 << arity, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ArmError::InvalidArgument(
                "objective table has non-finite entries".into(),
            ));
        }
        Ok(Self { arity, values })
    }

    /// Tabulates any objective.
    pub fn tabulate<O: Objective>(f: &O) -> Result<Self> {
        let arity = f.arity();
        if arity > MAX_ENUMERATION_ARITY {
            return Err(ArmError::Budget {
                arity,
                max: MAX_ENUMERATION_ARITY,
            });
        }
        let mut z = vec![0u8; arity];
        let values = (0..1usize << arity)
            .map(|i| {
                decode_config(i, &mut z);
                f.eval(&z)
            })
            .collect();
        Self::new(arity, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Objective for TableObjective {
    fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    fn eval(&self, z: &[u8]) -> f64 {
        self.values[table_index(z)]
    }
}

/// Objective backed by a closure.
pub struct FnObjective<F> {
    arity: usize,
    f: F,
}

impl<F: Fn(&[u8]) -> f64> FnObjective<F> {
    pub fn new(arity: usize, f: F) -> Self {
        Self { arity, f }
    }
}

impl<F: Fn(&[u8]) -> f64> Objective for FnObjective<F> {
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, z: &[u8]) -> f64 {
        (self.f)(z)
    }
}

/// Wraps an objective and counts how often it is evaluated.
pub struct CountingObjective<O> {
    inner: O,
    calls: Cell<usize>,
}

impl<O: Objective> CountingObjective<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            calls: Cell::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn reset(&self) {
        self.calls.set(0);
    }
}

impl<O: Objective> Objective for CountingObjective<O> {
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn eval(&self, z: &[u8]) -> f64 {
        self.calls.set(self.calls.get() + 1);
        self.inner.eval(z)
    }
    fn psi_len(&self) -> usize {
        self.inner.psi_len()
    }
    fn grad_psi(&self, z: &[u8]) -> Option<Vec<f64>> {
        self.inner.grad_psi(z)
    }
}

/// Exact `∇_φ E[f]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactGradient(pub Vec<f64>);

impl ExactGradient {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
fn decode_config(index: usize, z: &mut [u8]) {
    for (v, b) in z.iter_mut().enumerate() {
        *b = ((index >> v) & 1) as u8;
    }
}

fn check_budget<O: Objective>(f: &O, phi: &LogitVector) -> Result<usize> {
    let arity = f.arity();
    check_len(arity, phi.len())?;
    if arity > MAX_ENUMERATION_ARITY {
        return Err(ArmError::Budget {
            arity,
            max: MAX_ENUMERATION_ARITY,
        });
    }
    Ok(arity)
}

/// `Σ_z f(z) ∏_v σ(φ_v)^{z_v} σ(-φ_v)^{1-z_v}`, summed in configuration order.
pub fn exact_expectation<O: Objective>(f: &O, phi: &LogitVector) -> Result<f64> {
    let arity = check_budget(f, phi)?;
    let p = phi.probs();
    let q = phi.complement_probs();
    let mut z = vec![0u8; arity];
    let mut total = 0.0;
    for i in 0..1usize << arity {
        decode_config(i, &mut z);
        let w: f64 = z
            .iter()
            .enumerate()
            .map(|(v, &b)| if b == 1 { p[v] } else { q[v] })
            .product();
        total += w * f.eval(&z);
    }
    Ok(total)
}

/// Exact gradient through conditional expectations:
/// `∂E/∂φ_v = σ(φ_v)σ(-φ_v)·(E[f | z_v = 1] − E[f | z_v = 0])`.
pub fn exact_gradient<O: Objective>(f: &O, phi: &LogitVector) -> Result<ExactGradient> {
    let arity = check_budget(f, phi)?;
    let p = phi.probs();
    let q = phi.complement_probs();
    let mut z = vec![0u8; arity];
    let mut cond = vec![[0.0f64; 2]; arity];
    let mut mass = vec![0.0; arity];
    let mut prefix = vec![1.0; arity + 1];
    let mut suffix = vec![1.0; arity + 1];
    for i in 0..1usize << arity {
        decode_config(i, &mut z);
        for v in 0..arity {
            mass[v] = if z[v] == 1 { p[v] } else { q[v] };
        }
        for v in 0..arity {
            prefix[v + 1] = prefix[v] * mass[v];
        }
        for v in (0..arity).rev() {
            suffix[v] = suffix[v + 1] * mass[v];
        }
        let fz = f.eval(&z);
        for v in 0..arity {
            // weight of the other coordinates only
            cond[v][z[v] as usize] += prefix[v] * suffix[v + 1] * fz;
        }
    }
    Ok(ExactGradient(
        (0..arity).map(|v| p[v] * q[v] * (cond[v][1] - cond[v][0])).collect(),
    ))
}

/// Empirical statistics of one estimator at one `(f, φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimator: EstimatorKind,
    pub n_samples: usize,
    pub stream: RngStream,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub std_err: Vec<f64>,
    pub variance_se: Vec<f64>,
    pub snr: Vec<f64>,
}

impl EstimatorReport {
    pub fn from_moments(estimator: EstimatorKind, stream: RngStream, moments: &[Moments]) -> Self {
        Self {
            estimator,
            n_samples: moments.first().map_or(0, |m| m.n),
            stream,
            mean: moments.iter().map(|m| m.mean).collect(),
            variance: moments.iter().map(|m| m.variance).collect(),
            std_err: moments.iter().map(|m| m.std_err()).collect(),
            variance_se: moments.iter().map(|m| m.variance_se).collect(),
            snr: moments.iter().map(|m| m.snr()).collect(),
        }
    }
}

/// Runs `n_samples` independent single-sample estimates and summarises them.
pub fn estimator_moments<O: Objective>(
    est: &Estimator,
    f: &O,
    phi: &LogitVector,
    n_samples: usize,
    stream: RngStream,
) -> Result<EstimatorReport> {
    let samples = draw_estimates(est, f, phi, n_samples, stream)?;
    Ok(EstimatorReport::from_moments(est.kind(), stream, &samples.summary()))
}

/// The raw `n_samples × V` matrix behind [`estimator_moments`].
pub fn draw_estimates<O: Objective>(
    est: &Estimator,
    f: &O,
    phi: &LogitVector,
    n_samples: usize,
    stream: RngStream,
) -> Result<SampleMatrix> {
    if n_samples < 2 {
        return Err(ArmError::InvalidArgument(format!(
            "need at least 2 samples for moments, got {n_samples}"
        )));
    }
    let mut state = est.prepare(f, phi)?;
    let mut rng = stream.sampler();
    let mut out = SampleMatrix::with_capacity(phi.len(), n_samples);
    let mut buf = vec![0.0; phi.len()];
    for _ in 0..n_samples {
        state.sample_into(f, &mut rng, &mut buf);
        out.push(&buf);
    }
    Ok(out)
}

/// `σ(φ)σ(-φ)` per coordinate.
pub fn logit_jacobian(phi: &LogitVector) -> Vec<f64> {
    phi.values().iter().map(|&x| logistic(x) * logistic(-x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(p0: f64) -> FnObjective<impl Fn(&[u8]) -> f64> {
        FnObjective::new(1, move |z: &[u8]| (z[0] as f64 - p0).powi(2))
    }

    #[test]
    fn expectation_examples() {
        let phi0 = LogitVector::scalar(0.0).unwrap();
        let id = FnObjective::new(1, |z: &[u8]| z[0] as f64);
        assert_eq!(exact_expectation(&id, &phi0).unwrap(), 0.5);
        assert!((exact_expectation(&toy(0.49), &phi0).unwrap() - 0.2501).abs() < 1e-15);
        let c = FnObjective::new(3, |_: &[u8]| 2.5);
        let phi = LogitVector::new(vec![0.3, -1.0, 4.0]).unwrap();
        assert!((exact_expectation(&c, &phi).unwrap() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn gradient_examples() {
        let phi0 = LogitVector::scalar(0.0).unwrap();
        let g = exact_gradient(&toy(0.49), &phi0).unwrap();
        assert!((g.0[0] - 0.005).abs() < 1e-15);

        let c = FnObjective::new(3, |_: &[u8]| -1.0);
        let phi = LogitVector::new(vec![0.3, -1.0, 4.0]).unwrap();
        assert!(exact_gradient(&c, &phi).unwrap().0.iter().all(|g| g.abs() < 1e-15));

        let prod = FnObjective::new(2, |z: &[u8]| (z[0] * z[1]) as f64);
        let g = exact_gradient(&prod, &LogitVector::zeros(2).unwrap()).unwrap();
        assert_eq!(g.0, vec![0.125, 0.125]);
    }

    #[test]
    fn budget_and_dimension_errors() {
        let big = FnObjective::new(21, |_: &[u8]| 0.0);
        let phi = LogitVector::zeros(21).unwrap();
        assert_eq!(
            exact_expectation(&big, &phi),
            Err(ArmError::Budget { arity: 21, max: 20 })
        );
        assert!(exact_gradient(&big, &phi).is_err());
        let small = FnObjective::new(2, |_: &[u8]| 0.0);
        assert!(matches!(
            exact_expectation(&small, &LogitVector::zeros(3).unwrap()),
            Err(ArmError::Dimension { .. })
        ));
    }

    #[test]
    fn table_objective_indexing() {
        let t = TableObjective::new(2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.eval(&[1, 0]), 1.0);
        assert_eq!(t.eval(&[0, 1]), 2.0);
        assert_eq!(t.eval(&[1, 1]), 3.0);
        assert!(TableObjective::new(2, vec![0.0; 3]).is_err());
        assert!(TableObjective::new(1, vec![0.0, f64::NAN]).is_err());
        let tab = TableObjective::tabulate(&toy(0.3)).unwrap();
        assert_eq!(tab.values(), &[0.09, 0.48999999999999994]);
    }

    #[test]
    fn moments_reject_too_few_samples() {
        let f = toy(0.49);
        let phi = LogitVector::scalar(0.0).unwrap();
        assert!(estimator_moments(&Estimator::Arm, &f, &phi, 1, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn saturated_arm_has_no_spread() {
        let f = toy(0.49);
        let phi = LogitVector::scalar(10.0).unwrap();
        let r = estimator_moments(&Estimator::Arm, &f, &phi, 200, RngStream::new(1, 0)).unwrap();
        assert!(r.mean[0].abs() < 1e-6);
        assert!(r.variance[0] < 1e-8);
    }

    #[test]
    fn counting_objective_counts() {
        let f = CountingObjective::new(toy(0.2));
        f.eval(&[0]);
        f.eval(&[1]);
        assert_eq!(f.calls(), 2);
        f.reset();
        assert_eq!(f.calls(), 0);
    }
}
