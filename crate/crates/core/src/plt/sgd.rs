//! Logistic-loss training for a single tree node.

use crate::rng::seeded_rng;
use crate::sparse::SparseVector;
use rand::Rng;

/// Numerically guarded sigmoid; output is clamped inside (0, 1) so path
/// probability products never collapse to exactly 0 or 1.
pub fn sigmoid(z: f32) -> f32 {
    let p = 1.0 / (1.0 + (-z).exp());
    p.clamp(1e-6, 1.0 - 1e-6)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        0.0
    } else {
        x.exp().ln_1p()
    }
}

/// Full-batch objective: sum of per-example negative log-likelihoods plus
/// (l2/2)·‖w‖². Targets are 0 or 1. Evaluated in f64 so it can serve as a
/// finite-difference reference.
pub fn logistic_loss(
    w: &[f64],
    bias: f64,
    examples: &[(usize, f32)],
    docs: &[SparseVector],
    l2: f64,
) -> f64 {
    let mut loss = 0.0f64;
    for &(doc, target) in examples {
        let z = dense_dot64(w, &docs[doc]) + bias;
        // nll = softplus(z) - y*z  (== softplus(-z) for y = 1)
        loss += softplus(z) - f64::from(target) * z;
    }
    let norm2: f64 = w.iter().map(|&x| x * x).sum();
    loss + l2 / 2.0 * norm2
}

/// Gradient of [`logistic_loss`] in (weights, bias).
pub fn logistic_grad(
    w: &[f64],
    bias: f64,
    examples: &[(usize, f32)],
    docs: &[SparseVector],
    l2: f64,
) -> (Vec<f64>, f64) {
    let mut grad = vec![0.0f64; w.len()];
    let mut grad_bias = 0.0f64;
    for &(doc, target) in examples {
        let z = dense_dot64(w, &docs[doc]) + bias;
        let residual = 1.0 / (1.0 + (-z).exp()) - f64::from(target);
        for (i, v) in docs[doc].iter() {
            grad[i as usize] += residual * f64::from(v);
        }
        grad_bias += residual;
    }
    for (g, &x) in grad.iter_mut().zip(w) {
        *g += l2 * x;
    }
    (grad, grad_bias)
}

fn dense_dot64(w: &[f64], x: &SparseVector) -> f64 {
    x.iter().map(|(i, v)| w[i as usize] * f64::from(v)).sum()
}

fn raw_sigmoid(z: f32) -> f32 {
    1.0 / (1.0 + (-z).exp())
}

fn dense_dot(w: &[f32], x: &SparseVector) -> f32 {
    x.iter().map(|(i, v)| w[i as usize] * v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdParams {
    pub epochs: u32,
    pub learning_rate: f32,
    pub l2: f32,
}

/// Trains one logistic model by epoch-ordered stochastic gradient descent.
///
/// Examples are reshuffled every epoch from the node's own seeded stream.
/// The L2 decay is folded into a running scale factor so each step touches
/// only the example's non-zero coordinates. Fully deterministic.
pub fn train_logistic(
    examples: &[(usize, f32)],
    docs: &[SparseVector],
    dim: usize,
    params: SgdParams,
    seed: u64,
) -> (SparseVector, f32) {
    train_logistic_traced(examples, docs, dim, params, seed, |_, _| {})
}

/// Same as [`train_logistic`], invoking `on_epoch(weights, bias)` with the
/// folded state after every epoch.
pub fn train_logistic_traced(
    examples: &[(usize, f32)],
    docs: &[SparseVector],
    dim: usize,
    params: SgdParams,
    seed: u64,
    mut on_epoch: impl FnMut(&[f32], f32),
) -> (SparseVector, f32) {
    let mut w = vec![0.0f32; dim];
    let mut scale = 1.0f32;
    let mut bias = 0.0f32;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = seeded_rng(seed);
    let lr = params.learning_rate;
    let decay = 1.0 - lr * params.l2;

    for _ in 0..params.epochs {
        for i in 0..order.len() {
            let j = rng.gen_range(i..order.len());
            order.swap(i, j);
        }
        for &e in &order {
            let (doc, target) = examples[e];
            let x = &docs[doc];
            let z = scale * dense_dot(&w, x) + bias;
            let residual = raw_sigmoid(z) - target;
            if params.l2 > 0.0 {
                scale *= decay;
            }
            let step = lr * residual / scale;
            for (i, v) in x.iter() {
                w[i as usize] -= step * v;
            }
            bias -= lr * residual;
            if scale < 1e-6 {
                for x in &mut w {
                    *x *= scale;
                }
                scale = 1.0;
            }
        }
        if scale != 1.0 {
            for x in &mut w {
                *x *= scale;
            }
            scale = 1.0;
        }
        on_epoch(&w, bias);
    }
    let entries: Vec<(u32, f32)> = w
        .into_iter()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .map(|(i, v)| (i as u32, v))
        .collect();
    (SparseVector::from_sorted(entries), bias)
}
