//! Single-sample and K-sample gradient estimators for `∇_φ E_{z∼Bernoulli(σ(φ))}[f(z)]`.
//!
//! All estimators are driven by one uniform vector `u` per sample:
//!
//! * REINFORCE: `z = 1[u < σ(φ)]`, `g_v = f(z)(z_v − σ(φ_v))`.
//! * AR: `g_v = f(1[u < σ(φ)])(1 − 2u_v)`.
//! * ARM: `g_v = (f(1[u > σ(−φ)]) − f(1[u < σ(φ)]))(u_v − ½)`. When both
//!   binary vectors coincide the estimate is exactly zero and `f` is not
//!   evaluated.
//! * AR with constant baseline: `g_v = (f(1[u < σ(φ)]) − c_v)(1 − 2u_v)`.
//!
//! Because the same `u` feeds every estimator, the streams can be coupled
//! for paired comparisons by reusing an [`RngStream`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, ArmError, Result};
use crate::oracle::Objective;
use crate::rng::{RngStream, Sampler};
use crate::sampling::{antithetic_into, reflect, threshold_into, LogitVector, UniformDraw};
use crate::stats::pearson;

/// Estimator identity, without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Reinforce,
    Ar,
    Arm,
    ArConstBaseline,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Reinforce,
        EstimatorKind::Ar,
        EstimatorKind::Arm,
        EstimatorKind::ArConstBaseline,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Reinforce => "reinforce",
            EstimatorKind::Ar => "ar",
            EstimatorKind::Arm => "arm",
            EstimatorKind::ArConstBaseline => "ar-const-baseline",
        }
    }

    /// Single-sample draws needed to spend the same number of `f`
    /// evaluations as `k` ARM samples.
    pub fn matched_budget(&self, k: usize) -> usize {
        match self {
            EstimatorKind::Arm => k,
            _ => 2 * k,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = ArmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "reinforce" | "r" => Ok(EstimatorKind::Reinforce),
            "ar" => Ok(EstimatorKind::Ar),
            "arm" => Ok(EstimatorKind::Arm),
            "ar-const-baseline" => Ok(EstimatorKind::ArConstBaseline),
            _ => Err(ArmError::UnknownEstimator(s.to_string())),
        }
    }
}

/// A configured estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Estimator {
    Reinforce,
    Ar,
    Arm,
    /// AR minus the constant-based baseline `c_v(1 − 2u_v)`.
    ArConstBaseline(Vec<f64>),
}

impl Estimator {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::Reinforce => EstimatorKind::Reinforce,
            Estimator::Ar => EstimatorKind::Ar,
            Estimator::Arm => EstimatorKind::Arm,
            Estimator::ArConstBaseline(_) => EstimatorKind::ArConstBaseline,
        }
    }

    /// Precomputes probabilities and scratch space for repeated sampling.
    pub fn prepare<O: Objective>(&self, f: &O, phi: &LogitVector) -> Result<Prepared> {
        check_len(phi.len(), f.arity())?;
        let dim = phi.len();
        let baseline = match self {
            Estimator::ArConstBaseline(c) if c.is_empty() => vec![0.0; dim],
            Estimator::ArConstBaseline(c) => {
                check_len(dim, c.len())?;
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(ArmError::InvalidArgument("baseline constants must be finite".into()));
                }
                c.clone()
            }
            _ => Vec::new(),
        };
        Ok(Prepared {
            kind: self.kind(),
            probs: phi.probs(),
            complement: phi.complement_probs(),
            baseline,
            u: vec![0.0; dim],
            z1: vec![0; dim],
            z2: vec![0; dim],
        })
    }
}

impl From<EstimatorKind> for Estimator {
    /// The constant-baseline variant gets a zero baseline of matching length.
    fn from(kind: EstimatorKind) -> Self {
        match kind {
            EstimatorKind::Reinforce => Estimator::Reinforce,
            EstimatorKind::Ar => Estimator::Ar,
            EstimatorKind::Arm => Estimator::Arm,
            EstimatorKind::ArConstBaseline => Estimator::ArConstBaseline(Vec::new()),
        }
    }
}

/// An estimator bound to one `φ`, with reusable buffers.
#[derive(Debug, Clone)]
pub struct Prepared {
    kind: EstimatorKind,
    probs: Vec<f64>,
    complement: Vec<f64>,
    baseline: Vec<f64>,
    u: Vec<f64>,
    z1: Vec<u8>,
    z2: Vec<u8>,
}

impl Prepared {
    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    /// Draws one `u` and writes the estimate into `out`.
    pub fn sample_into<O: Objective>(&mut self, f: &O, rng: &mut Sampler, out: &mut [f64]) {
        let mut u = std::mem::take(&mut self.u);
        rng.fill_uniform(&mut u);
        self.estimate_at(f, &u, out);
        self.u = u;
    }

    /// The estimate at a given `u`.
    pub fn estimate_at<O: Objective>(&mut self, f: &O, u: &[f64], out: &mut [f64]) {
        match self.kind {
            EstimatorKind::Reinforce => {
                threshold_into(u, &self.probs, &mut self.z2);
                let fz = f.eval(&self.z2);
                for ((g, &z), &p) in out.iter_mut().zip(&self.z2).zip(&self.probs) {
                    *g = fz * (f64::from(z) - p);
                }
            }
            EstimatorKind::Ar => {
                threshold_into(u, &self.probs, &mut self.z2);
                let fz = f.eval(&self.z2);
                for (g, &u) in out.iter_mut().zip(u) {
                    *g = fz * (1.0 - 2.0 * u);
                }
            }
            EstimatorKind::ArConstBaseline => {
                threshold_into(u, &self.probs, &mut self.z2);
                let fz = f.eval(&self.z2);
                for (v, (g, &u)) in out.iter_mut().zip(u).enumerate() {
                    *g = (fz - self.baseline[v]) * (1.0 - 2.0 * u);
                }
            }
            EstimatorKind::Arm => {
                antithetic_into(u, &self.complement, &mut self.z1);
                threshold_into(u, &self.probs, &mut self.z2);
                if self.z1 == self.z2 {
                    out.fill(0.0);
                    return;
                }
                let delta = f.eval(&self.z1) - f.eval(&self.z2);
                for (g, &u) in out.iter_mut().zip(u) {
                    *g = delta * (u - 0.5);
                }
            }
        }
    }
}

/// One stochastic gradient estimate with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradEstimate {
    pub values: Vec<f64>,
    pub estimator: EstimatorKind,
    pub n_samples: usize,
    pub stream: RngStream,
}

fn single<O: Objective>(est: Estimator, f: &O, phi: &LogitVector, rng: &mut Sampler) -> Result<GradEstimate> {
    let mut state = est.prepare(f, phi)?;
    let mut values = vec![0.0; phi.len()];
    state.sample_into(f, rng, &mut values);
    Ok(GradEstimate {
        values,
        estimator: est.kind(),
        n_samples: 1,
        stream: rng.stream(),
    })
}

fn at<O: Objective>(est: Estimator, f: &O, phi: &LogitVector, u: &UniformDraw) -> Result<Vec<f64>> {
    check_len(phi.len(), u.len())?;
    let mut state = est.prepare(f, phi)?;
    let mut values = vec![0.0; phi.len()];
    state.estimate_at(f, u.values(), &mut values);
    Ok(values)
}

/// REINFORCE (score-function) estimate.
pub fn reinforce_grad<O: Objective>(f: &O, phi: &LogitVector, rng: &mut Sampler) -> Result<GradEstimate> {
    single(Estimator::Reinforce, f, phi, rng)
}

/// Augment-REINFORCE estimate.
pub fn ar_grad<O: Objective>(f: &O, phi: &LogitVector, rng: &mut Sampler) -> Result<GradEstimate> {
    single(Estimator::Ar, f, phi, rng)
}

/// Augment-REINFORCE-merge estimate.
pub fn arm_grad<O: Objective>(f: &O, phi: &LogitVector, rng: &mut Sampler) -> Result<GradEstimate> {
    single(Estimator::Arm, f, phi, rng)
}

/// AR with the baseline `c_v(1 − 2u_v)` subtracted.
pub fn ar_const_baseline_grad<O: Objective>(
    f: &O,
    phi: &LogitVector,
    c: &[f64],
    rng: &mut Sampler,
) -> Result<GradEstimate> {
    single(Estimator::ArConstBaseline(c.to_vec()), f, phi, rng)
}

pub fn reinforce_at<O: Objective>(f: &O, phi: &LogitVector, u: &UniformDraw) -> Result<Vec<f64>> {
    at(Estimator::Reinforce, f, phi, u)
}

pub fn ar_at<O: Objective>(f: &O, phi: &LogitVector, u: &UniformDraw) -> Result<Vec<f64>> {
    at(Estimator::Ar, f, phi, u)
}

pub fn arm_at<O: Objective>(f: &O, phi: &LogitVector, u: &UniformDraw) -> Result<Vec<f64>> {
    at(Estimator::Arm, f, phi, u)
}

pub fn ar_const_baseline_at<O: Objective>(f: &O, phi: &LogitVector, c: &[f64], u: &UniformDraw) -> Result<Vec<f64>> {
    at(Estimator::ArConstBaseline(c.to_vec()), f, phi, u)
}

/// The anti-symmetric baseline whose subtraction turns AR into ARM:
/// `b_v(u) = (f(1[u < σ(φ)]) + f(1[u > σ(−φ)]))(½ − u_v)`.
pub fn antisym_baseline<O: Objective>(f: &O, phi: &LogitVector, u: &UniformDraw) -> Result<Vec<f64>> {
    check_len(phi.len(), f.arity())?;
    check_len(phi.len(), u.len())?;
    let mut z = vec![0u8; phi.len()];
    threshold_into(u.values(), &phi.probs(), &mut z);
    let f_thr = f.eval(&z);
    antithetic_into(u.values(), &phi.complement_probs(), &mut z);
    let f_anti = f.eval(&z);
    Ok(u.values().iter().map(|&u| (f_thr + f_anti) * (0.5 - u)).collect())
}

/// Average of `k` independent single-sample estimates. For ARM each sample is
/// itself the merged antithetic pair, so this is the `K`-sample ARM estimate
/// with at most `2k` evaluations of `f`; for the other estimators pass
/// [`EstimatorKind::matched_budget`] to equalise the evaluation count.
pub fn k_sample<O: Objective>(
    est: &Estimator,
    f: &O,
    phi: &LogitVector,
    k: usize,
    rng: &mut Sampler,
) -> Result<GradEstimate> {
    if k < 1 {
        return Err(ArmError::InvalidArgument("K must be at least 1".into()));
    }
    let mut state = est.prepare(f, phi)?;
    let mut acc = vec![0.0; phi.len()];
    let mut buf = vec![0.0; phi.len()];
    for _ in 0..k {
        state.sample_into(f, rng, &mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b;
        }
    }
    let kf = k as f64;
    acc.iter_mut().for_each(|a| *a /= kf);
    Ok(GradEstimate {
        values: acc,
        estimator: est.kind(),
        n_samples: k,
        stream: rng.stream(),
    })
}

/// Correlation between `−g_v(u)` and `g_v(1 − u)` for the AR terms, and the
/// variance ratio `var(ARM_K)/var(AR_2K) = 1 − ρ_v` it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// `None` where one of the two streams has zero variance.
    pub rho: Vec<Option<f64>>,
    pub variance_ratio: Vec<Option<f64>>,
    pub n: usize,
}

impl CorrelationReport {
    pub fn is_degenerate(&self) -> bool {
        self.rho.iter().any(Option::is_none)
    }
}

pub fn correlation_report<O: Objective>(
    f: &O,
    phi: &LogitVector,
    n: usize,
    rng: &mut Sampler,
) -> Result<CorrelationReport> {
    if n < 100 {
        return Err(ArmError::InvalidArgument(format!(
            "correlation needs n >= 100, got {n}"
        )));
    }
    let dim = phi.len();
    let mut ar = Estimator::Ar.prepare(f, phi)?;
    let mut neg = vec![Vec::with_capacity(n); dim];
    let mut refl = vec![Vec::with_capacity(n); dim];
    let mut u = vec![0.0; dim];
    let mut u_ref = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for _ in 0..n {
        rng.fill_uniform(&mut u);
        for (r, &x) in u_ref.iter_mut().zip(&u) {
            *r = reflect(x);
        }
        ar.estimate_at(f, &u, &mut g);
        for v in 0..dim {
            neg[v].push(-g[v]);
        }
        ar.estimate_at(f, &u_ref, &mut g);
        for v in 0..dim {
            refl[v].push(g[v]);
        }
    }
    let rho: Vec<Option<f64>> = (0..dim).map(|v| pearson(&neg[v], &refl[v])).collect();
    let variance_ratio = rho.iter().map(|r| r.map(|r| 1.0 - r)).collect();
    Ok(CorrelationReport { rho, variance_ratio, n })
}
