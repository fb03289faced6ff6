use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, ArmError, Result};
use crate::rng::Sampler;
use crate::sampling::{bernoulli_log_mass, logistic};

use super::chain::{ArmPassStats, StochasticChain};
use super::layers::{bits_to_f64, Transform};
use super::Parameters;

/// Encoder/decoder layouts for the discrete VAE.
///
/// * `Nonlinear`: two LeakyReLU layers before a single stochastic layer.
/// * `Linear`: one stochastic layer, linear maps.
/// * `Linear2`: two stochastic layers, linear maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Nonlinear,
    Linear,
    Linear2,
}

impl FromStr for Architecture {
    type Err = ArmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nonlinear" => Ok(Architecture::Nonlinear),
            "linear" => Ok(Architecture::Linear),
            "linear2" | "linear-two-layers" => Ok(Architecture::Linear2),
            other => Err(ArmError::InvalidArgument(format!("unknown architecture `{other}`"))),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Nonlinear => "nonlinear",
            Architecture::Linear => "linear",
            Architecture::Linear2 => "linear2",
        })
    }
}

/// Discrete VAE with `T` stochastic layers.
///
/// Latent layers are indexed from the data side: `encoder[0]` maps `x` to
/// the logits of `b_0` and `encoder[t]` maps `b_{t−1}` to `b_t`.
/// `decoder[0]` maps `b_0` to the logits of `x`, `decoder[t]` maps `b_t` to
/// `b_{t−1}`, and `prior_logits` parameterise the factorised top layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub encoder: StochasticChain,
    pub decoder: Vec<Transform>,
    pub prior_logits: Vec<f64>,
}

/// The three terms of a single-sample ELBO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElboParts {
    pub log_lik: f64,
    pub log_prior: f64,
    pub log_q: f64,
    pub elbo: f64,
}

impl ElboParts {
    fn new(log_lik: f64, log_prior: f64, log_q: f64) -> Self {
        Self {
            log_lik,
            log_prior,
            log_q,
            elbo: log_lik + log_prior - log_q,
        }
    }
}

/// Result of one ARM training pass on one example.
#[derive(Debug, Clone)]
pub struct ElboStep {
    /// Gradient of the ELBO (ascent direction) for every parameter.
    pub grad: LayerStack,
    /// ELBO terms at the forward sample.
    pub parts: ElboParts,
    pub stats: ArmPassStats,
}

fn log_mass(bits: &[u8], logits: &[f64]) -> f64 {
    bits.iter().zip(logits).map(|(&b, &l)| bernoulli_log_mass(b, l)).sum()
}

/// `∂ log Bernoulli(bits; σ(ℓ)) / ∂ℓ = bits − σ(ℓ)`.
fn log_mass_grad(bits: &[u8], logits: &[f64]) -> Vec<f64> {
    bits.iter()
        .zip(logits)
        .map(|(&b, &l)| f64::from(b) - logistic(l))
        .collect()
}

impl LayerStack {
    pub fn new(encoder: Vec<Transform>, decoder: Vec<Transform>, prior_logits: Vec<f64>) -> Result<Self> {
        let stack = Self {
            encoder: StochasticChain { layers: encoder },
            decoder,
            prior_logits,
        };
        stack.validate()?;
        Ok(stack)
    }

    /// Builds a stack with Glorot-initialised weights and zero biases and
    /// prior logits. `latent` is the width of every stochastic layer.
    pub fn with_architecture(
        arch: Architecture,
        input: usize,
        latent: usize,
        leaky_slope: f64,
        rng: &mut Sampler,
    ) -> Result<Self> {
        if input == 0 || latent == 0 {
            return Err(ArmError::InvalidArgument("layer widths must be positive".into()));
        }
        let mut t = |w: &[usize]| Transform::glorot(w, leaky_slope, rng);
        let (encoder, decoder) = match arch {
            Architecture::Nonlinear => (
                vec![t(&[input, latent, latent, latent])],
                vec![t(&[latent, latent, latent, input])],
            ),
            Architecture::Linear => (vec![t(&[input, latent])], vec![t(&[latent, input])]),
            Architecture::Linear2 => (
                vec![t(&[input, latent]), t(&[latent, latent])],
                vec![t(&[latent, input]), t(&[latent, latent])],
            ),
        };
        Self::new(encoder, decoder, vec![0.0; latent])
    }

    pub fn depth(&self) -> usize {
        self.encoder.depth()
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    fn validate(&self) -> Result<()> {
        let depth = self.encoder.depth();
        if depth == 0 {
            return Err(ArmError::Shape("at least one stochastic layer is required".into()));
        }
        if self.decoder.len() != depth {
            return Err(ArmError::Shape(format!(
                "{} encoder layers but {} decoder layers",
                depth,
                self.decoder.len()
            )));
        }
        self.encoder.validate()?;
        let widths = self.encoder.widths();
        check_len(self.input_dim(), self.decoder[0].output_dim())?;
        for t in 0..depth {
            check_len(widths[t], self.decoder[t].input_dim())?;
            if t > 0 {
                check_len(widths[t - 1], self.decoder[t].output_dim())?;
            }
        }
        check_len(widths[depth - 1], self.prior_logits.len())
    }

    fn check_sample(&self, x: &[u8], latents: &[Vec<u8>]) -> Result<()> {
        check_len(self.input_dim(), x.len())?;
        check_len(self.depth(), latents.len())?;
        for (b, w) in latents.iter().zip(self.encoder.widths()) {
            check_len(w, b.len())?;
        }
        Ok(())
    }

    fn log_q(&self, x: &[f64], latents: &[Vec<u8>]) -> f64 {
        let mut total = 0.0;
        for (t, layer) in self.encoder.layers.iter().enumerate() {
            let logits = if t == 0 {
                layer.forward(x)
            } else {
                layer.forward(&bits_to_f64(&latents[t - 1]))
            };
            total += log_mass(&latents[t], &logits);
        }
        total
    }

    fn parts_unchecked(&self, x: &[u8], latents: &[Vec<u8>]) -> ElboParts {
        let depth = self.depth();
        let log_lik = log_mass(x, &self.decoder[0].forward(&bits_to_f64(&latents[0])));
        let mut log_prior = log_mass(&latents[depth - 1], &self.prior_logits);
        for t in 1..depth {
            log_prior += log_mass(&latents[t - 1], &self.decoder[t].forward(&bits_to_f64(&latents[t])));
        }
        let log_q = self.log_q(&bits_to_f64(x), latents);
        ElboParts::new(log_lik, log_prior, log_q)
    }

    /// Adds the pathwise gradient of the generative terms at `latents` into `grad`.
    fn generative_grad(&self, x: &[u8], latents: &[Vec<u8>], grad: &mut LayerStack) {
        let depth = self.depth();
        for t in 0..depth {
            let input = bits_to_f64(&latents[t]);
            let target: &[u8] = if t == 0 { x } else { &latents[t - 1] };
            let cache = self.decoder[t].forward_cached(&input);
            let d = log_mass_grad(target, &cache.output);
            self.decoder[t].backward(&cache, &d, &mut grad.decoder[t]);
        }
        for (g, d) in grad
            .prior_logits
            .iter_mut()
            .zip(log_mass_grad(&latents[depth - 1], &self.prior_logits))
        {
            *g += d;
        }
    }
}

/// `log p(x | b_0) + log p(b) − log q(b | x)` at one latent sample.
pub fn elbo(stack: &LayerStack, x: &[u8], latents: &[Vec<u8>]) -> Result<ElboParts> {
    stack.check_sample(x, latents)?;
    Ok(stack.parts_unchecked(x, latents))
}

/// Single-sample ARM gradient of the ELBO for one data vector.
///
/// Encoder weights get the layer-wise ARM estimate; decoder weights and
/// prior logits get the exact pathwise gradient at the forward sample.
pub fn arm_backprop_elbo(stack: &LayerStack, x: &[u8], rng: &mut Sampler) -> Result<ElboStep> {
    check_len(stack.input_dim(), x.len())?;
    let xf = bits_to_f64(x);
    let sample = stack.encoder.forward_sample(&xf, rng)?;
    let mut grad = stack.zeros_like();

    let stats = stack.encoder.arm_backward(
        &xf,
        &sample,
        |latents| stack.parts_unchecked(x, latents).elbo,
        rng,
        &mut grad.encoder,
    );
    stack.generative_grad(x, &sample.bits, &mut grad);
    let parts = stack.parts_unchecked(x, &sample.bits);
    Ok(ElboStep { grad, parts, stats })
}

impl Parameters for LayerStack {
    fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut specs = Vec::new();
        for (t, l) in self.encoder.layers.iter().enumerate() {
            specs.extend(l.tensor_specs(&format!("encoder.{t}")));
        }
        for (t, l) in self.decoder.iter().enumerate() {
            specs.extend(l.tensor_specs(&format!("decoder.{t}")));
        }
        specs.push(("prior.logits".into(), vec![self.prior_logits.len()]));
        specs
    }

    fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out: Vec<&Vec<f64>> = self.encoder.layers.iter().flat_map(Transform::tensors).collect();
        out.extend(self.decoder.iter().flat_map(Transform::tensors));
        out.push(&self.prior_logits);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = self
            .encoder
            .layers
            .iter_mut()
            .flat_map(Transform::tensors_mut)
            .collect();
        out.extend(self.decoder.iter_mut().flat_map(Transform::tensors_mut));
        out.push(&mut self.prior_logits);
        out
    }
}
