//! Ancestral sampling through a chain of stochastic binary layers and the
//! layer-wise ARM gradient for an arbitrary objective of the samples.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::rng::Sampler;
use crate::sampling::{logistic, threshold_into};

use super::layers::{bits_to_f64, Transform};

/// Stochastic layers in sampling order. Layer `t` draws
/// `b_t ∼ Bernoulli(σ(T_t(b_{t−1})))` with `b_{−1}` the chain input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticChain {
    pub layers: Vec<Transform>,
}

/// One ancestral pass: samples, the uniforms that produced them, and the
/// pre-sigmoid logits of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSample {
    pub bits: Vec<Vec<u8>>,
    pub uniforms: Vec<Vec<f64>>,
    pub logits: Vec<Vec<f64>>,
}

/// Bookkeeping from one ARM backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArmPassStats {
    /// Per layer: whether the two antithetic samples coincided.
    pub shortcut: Vec<bool>,
    /// Objective evaluations spent.
    pub evaluations: usize,
}

impl StochasticChain {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Transform::output_dim).collect()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for w in self.layers.windows(2) {
            check_len(w[0].output_dim(), w[1].input_dim())?;
        }
        Ok(())
    }

    fn layer_input(&self, input: &[f64], bits: &[Vec<u8>], t: usize) -> Vec<f64> {
        if t == 0 {
            input.to_vec()
        } else {
            bits_to_f64(&bits[t - 1])
        }
    }

    pub fn forward_sample(&self, input: &[f64], rng: &mut Sampler) -> Result<ChainSample> {
        check_len(self.input_dim(), input.len())?;
        let depth = self.depth();
        let mut sample = ChainSample {
            bits: Vec::with_capacity(depth),
            uniforms: Vec::with_capacity(depth),
            logits: Vec::with_capacity(depth),
        };
        for t in 0..depth {
            let x = self.layer_input(input, &sample.bits, t);
            let logits = self.layers[t].forward(&x);
            let mut u = vec![0.0; logits.len()];
            rng.fill_uniform(&mut u);
            let probs: Vec<f64> = logits.iter().map(|&l| logistic(l)).collect();
            let mut b = vec![0u8; logits.len()];
            threshold_into(&u, &probs, &mut b);
            sample.bits.push(b);
            sample.uniforms.push(u);
            sample.logits.push(logits);
        }
        Ok(sample)
    }

    /// Samples layers `from..` given the already fixed layer `from − 1`.
    pub(crate) fn sample_suffix(&self, bits: &mut Vec<Vec<u8>>, from: usize, rng: &mut Sampler) {
        for t in from..self.depth() {
            let logits = self.layers[t].forward(&bits_to_f64(&bits[t - 1]));
            let b = logits.iter().map(|&l| u8::from(rng.uniform() < logistic(l))).collect();
            bits.push(b);
        }
    }

    /// Layer-wise ARM gradient of `E[f(b_{0:T})]` with respect to every
    /// transform in the chain, accumulated into `grad`.
    ///
    /// Layer `t` reuses the prefix and the uniforms of `sample`. Where the
    /// two antithetic samples of layer `t` agree the layer contributes
    /// nothing and no suffix is drawn; otherwise both branches draw their
    /// own independent suffix.
    pub fn arm_backward<F>(
        &self,
        input: &[f64],
        sample: &ChainSample,
        mut f: F,
        rng: &mut Sampler,
        grad: &mut StochasticChain,
    ) -> ArmPassStats
    where
        F: FnMut(&[Vec<u8>]) -> f64,
    {
        let depth = self.depth();
        let mut stats = ArmPassStats {
            shortcut: Vec::with_capacity(depth),
            evaluations: 0,
        };
        for t in 0..depth {
            let logits = &sample.logits[t];
            let u = &sample.uniforms[t];
            let anti: Vec<u8> = u
                .iter()
                .zip(logits)
                .map(|(&u, &l)| u8::from(u > logistic(-l)))
                .collect();
            let thr: Vec<u8> = u.iter().zip(logits).map(|(&u, &l)| u8::from(u < logistic(l))).collect();
            if anti == thr {
                stats.shortcut.push(true);
                continue;
            }
            stats.shortcut.push(false);

            let mut branch = |bt: Vec<u8>, rng: &mut Sampler| {
                let mut bits: Vec<Vec<u8>> = sample.bits[..t].to_vec();
                bits.push(bt);
                self.sample_suffix(&mut bits, t + 1, rng);
                f(&bits)
            };
            let f_anti = branch(anti, rng);
            let f_thr = branch(thr, rng);
            stats.evaluations += 2;
            let delta = f_anti - f_thr;

            let d_logits: Vec<f64> = u.iter().map(|&u| delta * (u - 0.5)).collect();
            let x = self.layer_input(input, &sample.bits, t);
            let cache = self.layers[t].forward_cached(&x);
            self.layers[t].backward(&cache, &d_logits, &mut grad.layers[t]);
        }
        stats
    }
}
