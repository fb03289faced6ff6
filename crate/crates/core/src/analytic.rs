//! Closed-form univariate gradients, variances and signal-to-noise ratios.
//!
//! With a single Bernoulli variable only `f(1)` and `f(0)` matter, so every
//! formula here takes the two function values directly. Most of them are
//! expressed through `t = σ(|φ|) − σ(−|φ|)`, the probability that the
//! thresholded and antithetic samples agree.

use serde::{Deserialize, Serialize};

use crate::error::{ArmError, Result};
use crate::oracle::Objective;
use crate::sampling::logistic;

/// `E[(z − p0)²]` for `z ∼ Bernoulli(σ(φ))`; maximised at `σ(φ) = 1[p0 < ½]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyProblem {
    p0: f64,
}

impl ToyProblem {
    pub fn new(p0: f64) -> Result<Self> {
        if p0 > 0.0 && p0 < 1.0 {
            Ok(Self { p0 })
        } else {
            Err(ArmError::InvalidArgument(format!("p0 must lie in (0,1), got {p0}")))
        }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// `f(1) = (1 − p0)²`.
    pub fn f1(&self) -> f64 {
        (1.0 - self.p0).powi(2)
    }

    /// `f(0) = p0²`.
    pub fn f0(&self) -> f64 {
        self.p0 * self.p0
    }

    /// `(1 − 2p0)σ(φ)(1 − σ(φ))`.
    pub fn true_grad(&self, phi: f64) -> f64 {
        true_grad_univariate(self.f1(), self.f0(), phi)
    }
}

impl Objective for ToyProblem {
    fn arity(&self) -> usize {
        1
    }

    fn eval(&self, z: &[u8]) -> f64 {
        (f64::from(z[0]) - self.p0).powi(2)
    }
}

/// A logit together with its agreement probability `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPoint {
    pub phi: f64,
    pub t: f64,
}

impl AnalyticPoint {
    pub fn new(phi: f64) -> Self {
        Self { phi, t: agreement(phi) }
    }

    /// `1 − t = 2σ(−|φ|)`, computed without cancellation.
    pub fn one_minus_t(&self) -> f64 {
        2.0 * logistic(-self.phi.abs())
    }
}

/// `t = σ(|φ|) − σ(−|φ|)`.
pub fn agreement(phi: f64) -> f64 {
    let a = phi.abs();
    logistic(a) - logistic(-a)
}

/// `(1 − t)(t³ + 7/3 t² + 1/3 t + 1/3)/16`, the ARM variance per unit `(f1 − f0)²`.
fn arm_variance_coefficient(point: AnalyticPoint) -> f64 {
    let t = point.t;
    point.one_minus_t() * (t * t * t + 7.0 / 3.0 * t * t + t / 3.0 + 1.0 / 3.0) / 16.0
}

/// `σ(φ)σ(−φ)(f1 − f0)`.
pub fn true_grad_univariate(f1: f64, f0: f64, phi: f64) -> f64 {
    logistic(phi) * logistic(-phi) * (f1 - f0)
}

/// Exact variance of the single-sample univariate ARM estimate.
pub fn arm_variance_univariate(f1: f64, f0: f64, phi: f64) -> f64 {
    arm_variance_coefficient(AnalyticPoint::new(phi)) * (f1 - f0).powi(2)
}

/// Exact variance of single-sample REINFORCE:
/// `σ(1 − σ)[(1 − σ)f1 + σ f0]²`.
pub fn reinforce_variance_univariate(f1: f64, f0: f64, phi: f64) -> f64 {
    let s = logistic(phi);
    let c = logistic(-phi);
    s * c * (c * f1 + s * f0).powi(2)
}

/// Exact variance of single-sample AR:
/// `(f0² + f1²)/6 + (1 − 2σ)³(f0² − f1²)/6 − σ²(1 − σ)²(f1 − f0)²`.
pub fn ar_variance_univariate(f1: f64, f0: f64, phi: f64) -> f64 {
    let s = logistic(phi);
    let c = logistic(-phi);
    let skew = c - s;
    (f0 * f0 + f1 * f1) / 6.0 + skew.powi(3) * (f0 * f0 - f1 * f1) / 6.0 - (s * c).powi(2) * (f1 - f0).powi(2)
}

/// `|true gradient| / sd(ARM)`; independent of the function values.
pub fn arm_snr_univariate(phi: f64) -> f64 {
    let point = AnalyticPoint::new(phi);
    logistic(phi) * logistic(-phi) / arm_variance_coefficient(point).sqrt()
}

/// Location `t* = (√5 − 1)/2` and value of the ARM variance maximum, per unit `(f1 − f0)²`.
pub fn arm_variance_peak() -> (f64, f64) {
    let t = (5f64.sqrt() - 1.0) / 2.0;
    let coeff = (1.0 - t) * (t * t * t + 7.0 / 3.0 * t * t + t / 3.0 + 1.0 / 3.0) / 16.0;
    (t, coeff)
}

/// The bound `16/25 (1 − 2 f0/(f0 + f1))²` on `sup var(ARM) / sup var(REINFORCE)`
/// for sign-definite `f`.
pub fn worst_case_ratio_bound(f1: f64, f0: f64) -> f64 {
    16.0 / 25.0 * (1.0 - 2.0 * f0 / (f0 + f1)).powi(2)
}

/// Evenly spaced grid `lo, lo + step, …` up to and including `hi` (within
/// rounding). Points are computed as `lo + i·step` to avoid drift.
pub fn phi_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && hi >= lo);
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Supremum of `g` over the grid.
pub fn sup_over<F: Fn(f64) -> f64>(grid: &[f64], g: F) -> f64 {
    grid.iter().map(|&x| g(x)).fold(f64::NEG_INFINITY, f64::max)
}
