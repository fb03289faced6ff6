//! Deterministic building blocks: affine maps and LeakyReLU stacks with a
//! hand-written reverse pass.

use serde::{Deserialize, Serialize};

use crate::rng::Sampler;

/// Default negative slope of the LeakyReLU between deterministic layers.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.3;

/// `y = W x + b` with `W` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl AffineLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Zero bias, weights uniform in `±√(6/(fan_in + fan_out))`.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut Sampler) -> Self {
        let a = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| a * (2.0 * rng.uniform() - 1.0)).collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inputs);
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    /// Accumulates `∂/∂W += d xᵀ`, `∂/∂b += d` into `grad`.
    fn accumulate(&self, grad: &mut AffineLayer, x: &[f64], d: &[f64]) {
        for ((grow, gb), &dv) in grad
            .weights
            .chunks_exact_mut(self.inputs)
            .zip(grad.bias.iter_mut())
            .zip(d)
        {
            if dv == 0.0 {
                continue;
            }
            *gb += dv;
            for (g, &xv) in grow.iter_mut().zip(x) {
                *g += dv * xv;
            }
        }
    }

    /// `Wᵀ d`.
    fn backward_input(&self, d: &[f64], dx: &mut [f64]) {
        dx.fill(0.0);
        for (row, &dv) in self.weights.chunks_exact(self.inputs).zip(d) {
            if dv == 0.0 {
                continue;
            }
            for (g, &w) in dx.iter_mut().zip(row) {
                *g += dv * w;
            }
        }
    }
}

/// A chain of affine layers with LeakyReLU between them and a linear output.
/// A single layer is a plain affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub layers: Vec<AffineLayer>,
    pub leaky_slope: f64,
}

/// Activations recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct TransformCache {
    /// Input to each layer; entry 0 is the transform input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl Transform {
    /// Widths `[in, h1, …, out]`.
    pub fn glorot(widths: &[usize], leaky_slope: f64, rng: &mut Sampler) -> Self {
        assert!(widths.len() >= 2, "a transform needs an input and an output width");
        let layers = widths
            .windows(2)
            .map(|w| AffineLayer::glorot(w[0], w[1], rng))
            .collect();
        Self { layers, leaky_slope }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    fn leaky(&self, x: f64) -> f64 {
        if x >= 0.0 {
            x
        } else {
            self.leaky_slope * x
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).output
    }

    pub fn forward_cached(&self, x: &[f64]) -> TransformCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len().saturating_sub(1));
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut a = vec![0.0; layer.outputs];
            layer.forward(&cur, &mut a);
            inputs.push(cur);
            if i < last {
                let act = a.iter().map(|&v| self.leaky(v)).collect();
                pre.push(a);
                cur = act;
            } else {
                cur = a;
            }
        }
        TransformCache {
            inputs,
            pre,
            output: cur,
        }
    }

    /// Reverse pass: accumulates parameter gradients for upstream gradient
    /// `d_out` on the output into `grad`.
    pub fn backward(&self, cache: &TransformCache, d_out: &[f64], grad: &mut Transform) {
        let mut d = d_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            layer.accumulate(&mut grad.layers[i], &cache.inputs[i], &d);
            if i > 0 {
                let mut dx = vec![0.0; layer.inputs];
                layer.backward_input(&d, &mut dx);
                for (g, &a) in dx.iter_mut().zip(&cache.pre[i - 1]) {
                    if a < 0.0 {
                        *g *= self.leaky_slope;
                    }
                }
                d = dx;
            }
        }
    }

    pub(crate) fn tensors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.layers.iter().flat_map(|l| [&l.weights, &l.bias])
    }

    pub(crate) fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub(crate) fn tensor_specs(&self, prefix: &str) -> Vec<(String, Vec<usize>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    (format!("{prefix}.{i}.weight"), vec![l.outputs, l.inputs]),
                    (format!("{prefix}.{i}.bias"), vec![l.outputs]),
                ]
            })
            .collect()
    }
}

pub(crate) fn bits_to_f64(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| f64::from(b)).collect()
}
