//! Brute-force oracles for small stochastic binary networks.
//!
//! Everything is recomputed from the raw weight tensors with a local
//! sigmoid and matrix-vector product, so none of the library's forward,
//! sampling or ELBO code is on this path. Only single-affine-layer
//! transforms are supported.

#![allow(dead_code)]

use arm_core::sbn::{AffineLayer, ConditionalStack, LayerStack, Parameters, Transform};

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn affine(t: &Transform, x: &[u8]) -> Vec<f64> {
    assert_eq!(t.layers.len(), 1, "oracle supports single affine layers only");
    affine_f(&t.layers[0], &x.iter().map(|&b| b as f64).collect::<Vec<_>>())
}

fn affine_f(l: &AffineLayer, x: &[f64]) -> Vec<f64> {
    (0..l.outputs)
        .map(|o| l.bias[o] + (0..l.inputs).map(|i| l.weights[o * l.inputs + i] * x[i]).sum::<f64>())
        .collect()
}

/// Probability of `bits` under independent Bernoulli(σ(logits)).
fn mass(bits: &[u8], logits: &[f64]) -> f64 {
    bits.iter()
        .zip(logits)
        .map(|(&b, &l)| if b == 1 { sig(l) } else { 1.0 - sig(l) })
        .product()
}

fn all_bits(width: usize) -> Vec<Vec<u8>> {
    (0..1usize << width)
        .map(|i| (0..width).map(|v| ((i >> v) & 1) as u8).collect())
        .collect()
}

/// Every joint configuration of layers with the given widths.
pub fn configurations(widths: &[usize]) -> Vec<Vec<Vec<u8>>> {
    let mut out: Vec<Vec<Vec<u8>>> = vec![Vec::new()];
    for &w in widths {
        let mut next = Vec::new();
        for prefix in &out {
            for b in all_bits(w) {
                let mut p = prefix.clone();
                p.push(b);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn encoder_widths(stack: &LayerStack) -> Vec<usize> {
    stack.encoder.layers.iter().map(|t| t.layers[0].outputs).collect()
}

fn q_and_p(stack: &LayerStack, x: &[u8], b: &[Vec<u8>]) -> (f64, f64) {
    let depth = b.len();
    let mut q = mass(&b[0], &affine(&stack.encoder.layers[0], x));
    for t in 1..depth {
        q *= mass(&b[t], &affine(&stack.encoder.layers[t], &b[t - 1]));
    }
    let mut p = mass(x, &affine(&stack.decoder[0], &b[0]));
    for t in 1..depth {
        p *= mass(&b[t - 1], &affine(&stack.decoder[t], &b[t]));
    }
    p *= mass(&b[depth - 1], &stack.prior_logits);
    (q, p)
}

/// `E_q[log p(x, b) − log q(b | x)]` by enumeration.
pub fn exact_elbo(stack: &LayerStack, x: &[u8]) -> f64 {
    configurations(&encoder_widths(stack))
        .iter()
        .map(|b| {
            let (q, p) = q_and_p(stack, x, b);
            if q == 0.0 {
                0.0
            } else {
                q * (p.ln() - q.ln())
            }
        })
        .sum()
}

/// `log Σ_b p(x, b)` by enumeration.
pub fn exact_log_marginal(stack: &LayerStack, x: &[u8]) -> f64 {
    configurations(&encoder_widths(stack))
        .iter()
        .map(|b| q_and_p(stack, x, b).1)
        .sum::<f64>()
        .ln()
}

/// Probability of the joint latent configuration `b` given `x_cond`.
pub fn chain_mass(stack: &ConditionalStack, x_cond: &[u8], b: &[Vec<u8>]) -> f64 {
    let mut w = mass(&b[0], &affine(&stack.chain.layers[0], x_cond));
    for t in 1..b.len() {
        w *= mass(&b[t], &affine(&stack.chain.layers[t], &b[t - 1]));
    }
    w
}

/// `E_{p(b | x_cond)}[log p(x_target | b_bottom)]` by enumeration.
pub fn exact_expected_loglik(stack: &ConditionalStack, x_target: &[u8], x_cond: &[u8]) -> f64 {
    let widths: Vec<usize> = stack.chain.layers.iter().map(|t| t.layers[0].outputs).collect();
    configurations(&widths)
        .iter()
        .map(|b| {
            let mut w = mass(&b[0], &affine(&stack.chain.layers[0], x_cond));
            for t in 1..b.len() {
                w *= mass(&b[t], &affine(&stack.chain.layers[t], &b[t - 1]));
            }
            let ll = mass(x_target, &affine(&stack.output, &b[b.len() - 1])).ln();
            w * ll
        })
        .sum()
}

/// Exact marginal `log p(x_target | x_cond)` by enumeration.
pub fn exact_conditional_loglik(stack: &ConditionalStack, x_target: &[u8], x_cond: &[u8]) -> f64 {
    let widths: Vec<usize> = stack.chain.layers.iter().map(|t| t.layers[0].outputs).collect();
    configurations(&widths)
        .iter()
        .map(|b| {
            let mut w = mass(&b[0], &affine(&stack.chain.layers[0], x_cond));
            for t in 1..b.len() {
                w *= mass(&b[t], &affine(&stack.chain.layers[t], &b[t - 1]));
            }
            w * mass(x_target, &affine(&stack.output, &b[b.len() - 1]))
        })
        .sum::<f64>()
        .ln()
}

/// Central finite differences of `objective` with respect to every
/// parameter, laid out like `model.tensors()`.
pub fn fd_gradient<P: Parameters>(model: &P, objective: impl Fn(&P) -> f64, h: f64) -> Vec<Vec<f64>> {
    let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    for (ti, &len) in shapes.iter().enumerate() {
        let mut g = Vec::with_capacity(len);
        for k in 0..len {
            let mut plus = model.clone();
            plus.tensors_mut()[ti][k] += h;
            let mut minus = model.clone();
            minus.tensors_mut()[ti][k] -= h;
            g.push((objective(&plus) - objective(&minus)) / (2.0 * h));
        }
        out.push(g);
    }
    out
}
