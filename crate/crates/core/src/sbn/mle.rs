use serde::{Deserialize, Serialize};

use crate::error::{check_len, ArmError, Result};
use crate::rng::Sampler;
use crate::sampling::{bernoulli_log_mass, logistic};

use super::chain::{ArmPassStats, StochasticChain};
use super::layers::{bits_to_f64, Transform};
use super::Parameters;

/// Conditional stochastic binary network `p(x_target | x_cond)`.
///
/// `chain` holds the stochastic layers in sampling order: its first transform
/// maps `x_cond` to the top latent layer and its last latent layer feeds
/// `output`, which produces the logits of `x_target`. With two latent layers
/// this is `x_cond → b_2 → b_1 → x_target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalStack {
    pub chain: StochasticChain,
    pub output: Transform,
}

/// Result of one ARM training pass on one example.
#[derive(Debug, Clone)]
pub struct MleStep {
    /// Gradient of `log p(x_target | b_1)` in expectation over the latents.
    pub grad: ConditionalStack,
    /// `log p(x_target | b_1)` at the forward sample.
    pub log_lik: f64,
    pub stats: ArmPassStats,
}

impl ConditionalStack {
    pub fn new(chain: Vec<Transform>, output: Transform) -> Result<Self> {
        let stack = Self {
            chain: StochasticChain { layers: chain },
            output,
        };
        if stack.chain.depth() == 0 {
            return Err(ArmError::Shape("at least one stochastic layer is required".into()));
        }
        stack.chain.validate()?;
        check_len(*stack.chain.widths().last().unwrap_or(&0), stack.output.input_dim())?;
        Ok(stack)
    }

    /// Linear maps throughout, Glorot weights and zero biases. `latent` lists
    /// the stochastic widths in sampling order.
    pub fn linear(cond: usize, latent: &[usize], target: usize, rng: &mut Sampler) -> Result<Self> {
        if cond == 0 || target == 0 || latent.is_empty() || latent.contains(&0) {
            return Err(ArmError::InvalidArgument("layer widths must be positive".into()));
        }
        let mut widths = vec![cond];
        widths.extend_from_slice(latent);
        let chain = widths
            .windows(2)
            .map(|w| Transform::glorot(w, super::DEFAULT_LEAKY_SLOPE, rng))
            .collect();
        let output = Transform::glorot(&[latent[latent.len() - 1], target], super::DEFAULT_LEAKY_SLOPE, rng);
        Self::new(chain, output)
    }

    pub fn cond_dim(&self) -> usize {
        self.chain.input_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.output.output_dim()
    }

    fn check(&self, x_target: &[u8], x_cond: &[u8]) -> Result<()> {
        check_len(self.cond_dim(), x_cond.len())?;
        check_len(self.target_dim(), x_target.len())
    }

    /// `log p(x_target | b_1)` for the bottom latent layer `bottom`.
    pub fn log_lik(&self, x_target: &[u8], bottom: &[u8]) -> f64 {
        let logits = self.output.forward(&bits_to_f64(bottom));
        x_target
            .iter()
            .zip(&logits)
            .map(|(&b, &l)| bernoulli_log_mass(b, l))
            .sum()
    }
}

/// Single-sample ARM gradient of `E[log p(x_target | b_1)]` for one example.
///
/// The stochastic layers get the layer-wise ARM estimate; the output layer
/// gets its exact pathwise gradient at the forward sample.
pub fn arm_backprop_mle(
    stack: &ConditionalStack,
    x_target: &[u8],
    x_cond: &[u8],
    rng: &mut Sampler,
) -> Result<MleStep> {
    stack.check(x_target, x_cond)?;
    let xc = bits_to_f64(x_cond);
    let sample = stack.chain.forward_sample(&xc, rng)?;
    let mut grad = stack.zeros_like();
    let stats = stack.chain.arm_backward(
        &xc,
        &sample,
        |layers| stack.log_lik(x_target, &layers[layers.len() - 1]),
        rng,
        &mut grad.chain,
    );

    let bottom = &sample.bits[sample.bits.len() - 1];
    let cache = stack.output.forward_cached(&bits_to_f64(bottom));
    let d: Vec<f64> = x_target
        .iter()
        .zip(&cache.output)
        .map(|(&b, &l)| f64::from(b) - logistic(l))
        .collect();
    stack.output.backward(&cache, &d, &mut grad.output);
    let log_lik = x_target
        .iter()
        .zip(&cache.output)
        .map(|(&b, &l)| bernoulli_log_mass(b, l))
        .sum();
    Ok(MleStep { grad, log_lik, stats })
}

/// `log (1/K) Σ_k p(x_target | b_1^(k))` with `K` ancestral samples,
/// combined by a stable log-sum-exp.
pub fn iwae_style_loglik(
    stack: &ConditionalStack,
    x_target: &[u8],
    x_cond: &[u8],
    k: usize,
    rng: &mut Sampler,
) -> Result<f64> {
    if k < 1 {
        return Err(ArmError::InvalidArgument("K must be at least 1".into()));
    }
    stack.check(x_target, x_cond)?;
    let xc = bits_to_f64(x_cond);
    let mut terms = Vec::with_capacity(k);
    for _ in 0..k {
        let sample = stack.chain.forward_sample(&xc, rng)?;
        terms.push(stack.log_lik(x_target, &sample.bits[sample.bits.len() - 1]));
    }
    Ok(log_mean_exp(&terms))
}

pub(crate) fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + (s / xs.len() as f64).ln()
}

impl Parameters for ConditionalStack {
    fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut specs = Vec::new();
        for (t, l) in self.chain.layers.iter().enumerate() {
            specs.extend(l.tensor_specs(&format!("chain.{t}")));
        }
        specs.extend(self.output.tensor_specs("output"));
        specs
    }

    fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out: Vec<&Vec<f64>> = self.chain.layers.iter().flat_map(Transform::tensors).collect();
        out.extend(self.output.tensors());
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = self.chain.layers.iter_mut().flat_map(Transform::tensors_mut).collect();
        out.extend(self.output.tensors_mut());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn log_mean_exp_is_stable() {
        assert!((log_mean_exp(&[-1000.0, -1000.0]) + 1000.0).abs() < 1e-12);
        let v = log_mean_exp(&[0.0, 2f64.ln()]);
        assert!((v - 1.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_sample_loglik_matches_k_one() {
        let mut rng = RngStream::new(5, 0).sampler();
        let stack = ConditionalStack::linear(4, &[3, 3], 4, &mut rng).unwrap();
        let (xt, xc) = ([1, 0, 1, 0], [0, 1, 1, 0]);
        let s = RngStream::new(6, 0);
        let iw = iwae_style_loglik(&stack, &xt, &xc, 1, &mut s.sampler()).unwrap();
        let sample = stack.chain.forward_sample(&bits_to_f64(&xc), &mut s.sampler()).unwrap();
        assert_eq!(iw, stack.log_lik(&xt, &sample.bits[1]));
        assert!(iwae_style_loglik(&stack, &xt, &xc, 0, &mut s.sampler()).is_err());
    }

    #[test]
    fn saturated_latents_give_logistic_regression_gradient() {
        let mut rng = RngStream::new(8, 0).sampler();
        let mut stack = ConditionalStack::linear(2, &[3], 2, &mut rng).unwrap();
        for l in &mut stack.chain.layers {
            l.layers[0].weights.fill(0.0);
            l.layers[0].bias = vec![50.0, -50.0, 50.0];
        }
        let xt = [1, 0];
        let step = arm_backprop_mle(&stack, &xt, &[1, 1], &mut rng).unwrap();
        assert_eq!(step.stats.evaluations, 0);
        let h = [1.0, 0.0, 1.0];
        let logits = stack.output.forward(&h);
        for (o, (&x, &l)) in xt.iter().zip(&logits).enumerate() {
            let r = f64::from(x) - logistic(l);
            assert!((step.grad.output.layers[0].bias[o] - r).abs() < 1e-15);
            for i in 0..3 {
                assert!((step.grad.output.layers[0].weights[o * 3 + i] - r * h[i]).abs() < 1e-15);
            }
        }
        assert!(step
            .grad
            .chain
            .layers
            .iter()
            .all(|l| l.layers[0].weights.iter().all(|&w| w == 0.0)));
    }
}
