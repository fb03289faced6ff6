//! Versioned JSON checkpoints: named parameter tensors with shapes, the
//! optimizer state and the position of the training random stream.
//!
//! Doubles are written in shortest round-trip form and parsed with exact
//! rounding, so save/load is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ArmError, Result};
use crate::rng::{RngStream, Sampler};

use super::adam::OptimizerState;
use super::Parameters;

pub const CHECKPOINT_FORMAT: &str = "arm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// Free-form description of the model layout.
    pub model: String,
    pub step: u64,
    pub tensors: Vec<NamedTensor>,
    pub optimizer: OptimizerState,
    pub rng_stream: RngStream,
    /// Keystream position in 32-bit words, as a decimal string.
    pub rng_word_pos: String,
}

impl Checkpoint {
    pub fn capture<P: Parameters>(
        model_desc: impl Into<String>,
        model: &P,
        optimizer: &OptimizerState,
        rng: &Sampler,
        step: u64,
    ) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            model: model_desc.into(),
            step,
            tensors: model.named_tensors(),
            optimizer: optimizer.clone(),
            rng_stream: rng.stream(),
            rng_word_pos: rng.word_pos().to_string(),
        }
    }

    /// Loads the tensors into `model` and returns the optimizer and the
    /// resumed random stream.
    pub fn restore<P: Parameters>(&self, model: &mut P) -> Result<(OptimizerState, Sampler)> {
        model.load_tensors(&self.tensors)?;
        let pos: u128 = self
            .rng_word_pos
            .parse()
            .map_err(|_| ArmError::Checkpoint(format!("bad rng position `{}`", self.rng_word_pos)))?;
        Ok((self.optimizer.clone(), Sampler::resume(self.rng_stream, pos)))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| ArmError::Checkpoint(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(s).map_err(|e| ArmError::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(ArmError::Checkpoint(format!("unexpected format `{}`", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(ArmError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| ArmError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| ArmError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::sbn::{adam_step, Architecture, LayerStack};

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = RngStream::new(12, 0).sampler();
        let mut stack = LayerStack::with_architecture(Architecture::Linear2, 6, 4, 0.3, &mut rng).unwrap();
        let mut opt = OptimizerState::new(1e-3, true);
        let mut g = stack.zeros_like();
        for (i, t) in g.tensors_mut().into_iter().enumerate() {
            t.iter_mut()
                .enumerate()
                .for_each(|(j, x)| *x = ((i * 31 + j) as f64).sin() / 3.0);
        }
        adam_step(&mut stack, &g, &mut opt).unwrap();
        rng.uniform_draw(5);

        let ck = Checkpoint::capture("vae linear2", &stack, &opt, &rng, 1);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);

        let mut fresh = stack.zeros_like();
        let (opt2, mut rng2) = back.restore(&mut fresh).unwrap();
        assert_eq!(fresh, stack);
        assert_eq!(opt2, opt);
        assert_eq!(rng2.uniform(), rng.uniform());
    }

    #[test]
    fn header_is_checked() {
        let mut rng = RngStream::new(1, 0).sampler();
        let stack = LayerStack::with_architecture(Architecture::Linear, 3, 2, 0.3, &mut rng).unwrap();
        let mut ck = Checkpoint::capture("x", &stack, &OptimizerState::new(1e-3, true), &rng, 0);
        ck.version = 99;
        assert!(Checkpoint::from_json(&ck.to_json().unwrap()).is_err());
    }

    #[test]
    fn mismatched_model_is_rejected() {
        let mut rng = RngStream::new(1, 0).sampler();
        let small = LayerStack::with_architecture(Architecture::Linear, 3, 2, 0.3, &mut rng).unwrap();
        let mut big = LayerStack::with_architecture(Architecture::Linear, 4, 2, 0.3, &mut rng).unwrap();
        let ck = Checkpoint::capture("x", &small, &OptimizerState::new(1e-3, true), &rng, 0);
        assert!(ck.restore(&mut big).is_err());
    }
}
