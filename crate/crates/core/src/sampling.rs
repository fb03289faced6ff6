//! Bernoulli sampling primitives: the sigmoid, the thresholded uniform draw,
//! its antithetic twin, and the exponential-race construction.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, ArmError, Result};
use crate::rng::Sampler;

/// Numerically stable logistic function. Only ever exponentiates `-|x|`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Checked sigmoid: rejects non-finite input.
pub fn sigmoid(phi: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(ArmError::InvalidArgument(format!("sigmoid of non-finite value {phi}")));
    }
    Ok(logistic(phi))
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log σ(x) = -softplus(-x)`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// Log-mass of `bit` under `Bernoulli(σ(logit))`.
#[inline]
pub fn bernoulli_log_mass(bit: u8, logit: f64) -> f64 {
    if bit == 1 {
        log_sigmoid(logit)
    } else {
        log_sigmoid(-logit)
    }
}

/// Bernoulli logits, one per latent coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(ArmError::InvalidArgument("logit vector must be non-empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(ArmError::InvalidArgument(format!("non-finite logit {bad}")));
        }
        Ok(Self(values))
    }

    pub fn scalar(phi: f64) -> Result<Self> {
        Self::new(vec![phi])
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `σ(φ_v)` per coordinate.
    pub fn probs(&self) -> Vec<f64> {
        self.0.iter().map(|&p| logistic(p)).collect()
    }

    /// `σ(-φ_v)` per coordinate.
    pub fn complement_probs(&self) -> Vec<f64> {
        self.0.iter().map(|&p| logistic(-p)).collect()
    }
}

/// A vector of uniforms in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformDraw(Vec<f64>);

impl UniformDraw {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|u| !(0.0..1.0).contains(*u)) {
            return Err(ArmError::InvalidArgument(format!("uniform value {bad} outside [0,1)")));
        }
        Ok(Self(values))
    }

    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|u| (0.0..1.0).contains(u)));
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// The reflected draw `1 - u`. Entries equal to zero are mapped to the
    /// largest double below one so the result stays inside `[0, 1)`.
    pub fn reflect(&self) -> UniformDraw {
        UniformDraw(self.0.iter().map(|&u| reflect(u)).collect())
    }
}

#[inline]
pub(crate) fn reflect(u: f64) -> f64 {
    let r = 1.0 - u;
    if r >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        r
    }
}

/// A realisation of a binary vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinarySample(Vec<u8>);

impl BinarySample {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(ArmError::InvalidArgument(format!("bit value {bad} not in {{0,1}}")));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }
}

/// `z_v = 1[u_v < p_v]` into a caller-owned buffer.
#[inline]
pub(crate) fn threshold_into(u: &[f64], probs: &[f64], out: &mut [u8]) {
    for ((z, &u), &p) in out.iter_mut().zip(u).zip(probs) {
        *z = u8::from(u < p);
    }
}

/// `z_v = 1[u_v > q_v]` where `q_v = σ(-φ_v)`.
#[inline]
pub(crate) fn antithetic_into(u: &[f64], complement_probs: &[f64], out: &mut [u8]) {
    for ((z, &u), &q) in out.iter_mut().zip(u).zip(complement_probs) {
        *z = u8::from(u > q);
    }
}

/// Thresholded sample `1[u < σ(φ)]`; ties go to zero.
pub fn threshold_sample(u: &UniformDraw, phi: &LogitVector) -> Result<BinarySample> {
    check_len(phi.len(), u.len())?;
    let mut bits = vec![0u8; u.len()];
    threshold_into(u.values(), &phi.probs(), &mut bits);
    Ok(BinarySample(bits))
}

/// Antithetic sample `1[u > σ(-φ)]`.
pub fn antithetic_sample(u: &UniformDraw, phi: &LogitVector) -> Result<BinarySample> {
    check_len(phi.len(), u.len())?;
    let mut bits = vec![0u8; u.len()];
    antithetic_into(u.values(), &phi.complement_probs(), &mut bits);
    Ok(BinarySample(bits))
}

/// Bernoulli(σ(φ)) through a race of two unit exponentials:
/// returns `1[ε1 < ε2·e^φ]`, compared in log space.
pub fn exponential_race_sample(rng: &mut Sampler, phi: f64) -> Result<u8> {
    if !phi.is_finite() {
        return Err(ArmError::InvalidArgument(format!("non-finite logit {phi}")));
    }
    let e1 = rng.exp1();
    let e2 = rng.exp1();
    Ok(u8::from(e1.ln() < e2.ln() + phi))
}
