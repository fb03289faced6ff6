//! Stochastic binary networks trained with ARM backpropagation: a discrete
//! VAE maximising a single-sample ELBO, and a conditional network fitted by
//! maximum likelihood.

mod adam;
mod chain;
mod checkpoint;
mod layers;
mod mle;
mod vae;

pub use adam::{adam_step, OptimizerState};
pub use chain::{ArmPassStats, ChainSample, StochasticChain};
pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use layers::{AffineLayer, Transform, TransformCache, DEFAULT_LEAKY_SLOPE};
pub use mle::{arm_backprop_mle, iwae_style_loglik, ConditionalStack, MleStep};
pub use vae::{arm_backprop_elbo, elbo, Architecture, ElboParts, ElboStep, LayerStack};

use crate::error::{ArmError, Result};

/// A model whose parameters are a fixed, ordered list of named tensors.
pub trait Parameters: Clone {
    /// Name and shape of every tensor, in a stable order.
    fn tensor_specs(&self) -> Vec<(String, Vec<usize>)>;

    fn tensors(&self) -> Vec<&Vec<f64>>;

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>>;

    /// Same structure with every entry set to zero.
    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// `self += scale · other`.
    fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Overwrites every tensor from `named`, checking names and shapes.
    fn load_tensors(&mut self, named: &[NamedTensor]) -> Result<()> {
        let specs = self.tensor_specs();
        if specs.len() != named.len() {
            return Err(ArmError::Checkpoint(format!(
                "expected {} tensors, found {}",
                specs.len(),
                named.len()
            )));
        }
        for ((name, shape), t) in specs.iter().zip(named) {
            if *name != t.name || *shape != t.shape {
                return Err(ArmError::Checkpoint(format!(
                    "tensor {} {:?} does not match {} {:?}",
                    t.name, t.shape, name, shape
                )));
            }
        }
        for (dst, t) in self.tensors_mut().into_iter().zip(named) {
            if dst.len() != t.data.len() {
                return Err(ArmError::Checkpoint(format!("tensor {} has wrong length", t.name)));
            }
            dst.copy_from_slice(&t.data);
        }
        Ok(())
    }

    fn named_tensors(&self) -> Vec<NamedTensor> {
        self.tensor_specs()
            .into_iter()
            .zip(self.tensors())
            .map(|((name, shape), data)| NamedTensor {
                name,
                shape,
                data: data.clone(),
            })
            .collect()
    }
}
