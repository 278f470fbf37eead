//! Per-example losses and their gradients.
//!
//! `L1` is the cross-entropy of the vertical score over every entity. `L2`
//! is the weighted negative-sampling loss over the combined score
//! `f = f_c + λ f_g` (or `f_g` alone for horizontal-only models). Negatives
//! and their post-sampling weights are drawn once per example and then held
//! fixed, so both losses are smooth functions of the parameters.

use rand::Rng;

use crate::data::Triple;
use crate::model::{Gradients, ParameterStore};
use crate::real::Real;
use crate::sampling::{PostWeightScore, PostWeighting, PreSampler};
use crate::train::config::Paradigm;
use crate::vlp::{ReferencePair, VerticalForward};

/// `log σ(x)` without overflow for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Score settings shared by every example of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub paradigm: Paradigm,
    pub lambda: f64,
    pub gamma: f64,
}

/// A positive triple with its references and its frozen negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub triple: Triple,
    pub refs: Vec<ReferencePair>,
    pub negatives: Vec<u32>,
    pub post_weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExampleLoss {
    pub l1: f64,
    pub l2: f64,
}

fn combined<F: Real>(
    store: &ParameterStore<F>,
    cfg: &LossConfig,
    fwd: Option<&VerticalForward>,
    h: u32,
    r: u32,
    t: u32,
) -> f64 {
    match fwd {
        Some(fwd) => store.score_fc(fwd, t) + cfg.lambda * store.score_fg(h, r, t),
        None => store.score_fg(h, r, t),
    }
}

/// Draws negatives for `triple` and freezes their post-sampling weights at
/// the current parameters.
#[allow(clippy::too_many_arguments)]
pub fn prepare_example<F: Real, R: Rng + ?Sized>(
    store: &ParameterStore<F>,
    cfg: &LossConfig,
    triple: Triple,
    refs: Vec<ReferencePair>,
    sampler: &PreSampler,
    weighting: PostWeighting,
    weight_score: PostWeightScore,
    negatives: usize,
    rng: &mut R,
) -> Example {
    let Triple {
        head: h,
        relation: r,
        tail: t,
    } = triple;
    let negs = sampler.sample_negatives(h, negatives, rng);
    let post_weights = match weighting {
        PostWeighting::Uniform => vec![1.0 / negs.len() as f64; negs.len()],
        _ => {
            let fwd = match (weight_score, cfg.paradigm) {
                (PostWeightScore::Combined, Paradigm::Vlp) => {
                    Some(store.vertical_forward(h, r, &refs))
                }
                _ => None,
            };
            let c = combined(store, cfg, fwd.as_ref(), h, r, t);
            let scores: Vec<f64> = negs
                .iter()
                .map(|&n| combined(store, cfg, fwd.as_ref(), h, r, n))
                .collect();
            weighting.weights(c, &scores)
        }
    };
    Example {
        triple,
        refs,
        negatives: negs,
        post_weights,
    }
}

/// Loss values of one example at the current parameters.
pub fn example_loss<F: Real>(
    store: &ParameterStore<F>,
    cfg: &LossConfig,
    ex: &Example,
) -> ExampleLoss {
    let Triple {
        head: h,
        relation: r,
        tail: t,
    } = ex.triple;
    let fwd = (cfg.paradigm == Paradigm::Vlp).then(|| store.vertical_forward(h, r, &ex.refs));
    let l1 = match &fwd {
        Some(fwd) => {
            let s = store.score_fc_all(fwd);
            log_sum_exp(&s) - s[t as usize]
        }
        None => 0.0,
    };
    let pos = combined(store, cfg, fwd.as_ref(), h, r, t);
    let mut l2 = -log_sigmoid(cfg.gamma + pos);
    for (&n, &p) in ex.negatives.iter().zip(&ex.post_weights) {
        let f = combined(store, cfg, fwd.as_ref(), h, r, n);
        l2 -= p * log_sigmoid(-f - cfg.gamma);
    }
    ExampleLoss { l1, l2 }
}

/// Loss values of one example, accumulating `l1_scale·∇L1 + l2_scale·∇L2`
/// into `grads`. A zero scale skips that term's gradient entirely.
pub fn example_loss_and_grad<F: Real>(
    store: &ParameterStore<F>,
    cfg: &LossConfig,
    ex: &Example,
    l1_scale: f64,
    l2_scale: f64,
    grads: &mut Gradients,
) -> ExampleLoss {
    let Triple {
        head: h,
        relation: r,
        tail: t,
    } = ex.triple;
    let vlp = cfg.paradigm == Paradigm::Vlp;
    let fwd = vlp.then(|| store.vertical_forward(h, r, &ex.refs));

    // Upstream weights on f_c(·) per candidate entity.
    let mut fc_weights: Vec<f64> = Vec::new();
    let mut l1 = 0.0;
    if let Some(fwd) = &fwd {
        let s = store.score_fc_all(fwd);
        let lse = log_sum_exp(&s);
        l1 = lse - s[t as usize];
        if l1_scale != 0.0 {
            fc_weights = s.iter().map(|x| l1_scale * (x - lse).exp()).collect();
            fc_weights[t as usize] -= l1_scale;
        }
    }

    let pos = combined(store, cfg, fwd.as_ref(), h, r, t);
    let mut l2 = -log_sigmoid(cfg.gamma + pos);
    let neg_scores: Vec<f64> = ex
        .negatives
        .iter()
        .map(|&n| combined(store, cfg, fwd.as_ref(), h, r, n))
        .collect();
    for (&f, &p) in neg_scores.iter().zip(&ex.post_weights) {
        l2 -= p * log_sigmoid(-f - cfg.gamma);
    }

    if l2_scale != 0.0 {
        let fg_factor = if vlp { cfg.lambda } else { 1.0 };
        let mut upstream: Vec<(u32, f64)> = Vec::with_capacity(ex.negatives.len() + 1);
        upstream.push((t, -l2_scale * sigmoid(-cfg.gamma - pos)));
        for ((&n, &f), &p) in ex.negatives.iter().zip(&neg_scores).zip(&ex.post_weights) {
            upstream.push((n, l2_scale * p * sigmoid(f + cfg.gamma)));
        }
        if vlp {
            if fc_weights.is_empty() {
                fc_weights = vec![0.0; store.num_entities()];
            }
            for &(e, g) in &upstream {
                fc_weights[e as usize] += g;
            }
        }
        for &(e, g) in &upstream {
            store.grad_fg(h, r, e, fg_factor * g, grads);
        }
    }

    if let Some(fwd) = &fwd {
        if !fc_weights.is_empty() {
            store.vertical_backward(
                fwd,
                fc_weights.iter().enumerate().map(|(e, &w)| (e as u32, w)),
                grads,
            );
        }
    }
    ExampleLoss { l1, l2 }
}
