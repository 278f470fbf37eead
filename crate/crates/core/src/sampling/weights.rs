//! Post-sampling weights over a set of scored negatives.

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    if logits.is_empty() {
        return Vec::new();
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Relative-distance logit of a negative scored `n` against a positive
/// scored `c`: `α1·n` up to `c + τ`, then `α1·c − α2·(n − c − τ)`.
pub fn red_logit(c: f64, n: f64, alpha1: f64, alpha2: f64, tau: f64) -> f64 {
    if n <= c + tau {
        alpha1 * n
    } else {
        alpha1 * c - alpha2 * (n - c - tau)
    }
}

/// ReD post-sampling weights: a softmax over [`red_logit`], which first
/// rises and then falls as the negative score grows past `c + τ`.
pub fn post_weights(c: f64, negatives: &[f64], alpha1: f64, alpha2: f64, tau: f64) -> Vec<f64> {
    let logits: Vec<f64> = negatives
        .iter()
        .map(|&n| red_logit(c, n, alpha1, alpha2, tau))
        .collect();
    softmax(&logits)
}

/// Self-adversarial weights, monotone in the negative score.
pub fn selfadv_weights(negatives: &[f64], alpha1: f64) -> Vec<f64> {
    let logits: Vec<f64> = negatives.iter().map(|&n| alpha1 * n).collect();
    softmax(&logits)
}

pub fn uniform_weights(l: usize) -> Vec<f64> {
    vec![1.0 / l as f64; l]
}

/// How negatives are weighted inside the sampling loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostWeighting {
    Uniform,
    SelfAdv { alpha1: f64 },
    ReD { alpha1: f64, alpha2: f64, tau: f64 },
}

impl PostWeighting {
    pub fn weights(&self, positive: f64, negatives: &[f64]) -> Vec<f64> {
        match *self {
            PostWeighting::Uniform => uniform_weights(negatives.len()),
            PostWeighting::SelfAdv { alpha1 } => selfadv_weights(negatives, alpha1),
            PostWeighting::ReD {
                alpha1,
                alpha2,
                tau,
            } => post_weights(positive, negatives, alpha1, alpha2, tau),
        }
    }
}
