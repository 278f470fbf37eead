//! Query/answer projections, similarity and the horizontal score `f_g`,
//! with their analytic gradients.
//!
//! Complex rows are split blocks `[re_0..re_{d-1}, im_0..im_{d-1}]`; every
//! projection returns the realified vector of width `d_k`, so norms and dot
//! products below need no knowledge of the space.

use crate::error::{Error, Result};
use crate::model::grad::Gradients;
use crate::model::kind::{ModelKind, Norm};
use crate::model::store::ParameterStore;
use crate::real::Real;

/// `g(q, k)` on realified vectors: negated norm for distance models, dot
/// product otherwise (the complex `Re(qᵀ conj k)` is the realified dot).
pub fn similarity(kind: ModelKind, norm: Norm, q: &[f64], k: &[f64]) -> Result<f64> {
    if q.len() != k.len() {
        return Err(Error::DimMismatch {
            expected: q.len(),
            actual: k.len(),
        });
    }
    Ok(similarity_row(kind, norm, q, k))
}

#[inline]
pub(crate) fn similarity_row<F: Real>(kind: ModelKind, norm: Norm, q: &[f64], k: &[F]) -> f64 {
    if kind.is_distance() {
        match norm {
            Norm::L2 => {
                let mut s = 0.0;
                for (a, b) in q.iter().zip(k) {
                    let d = a - b.to_f64();
                    s += d * d;
                }
                -s.sqrt()
            }
            Norm::L1 => {
                let mut s = 0.0;
                for (a, b) in q.iter().zip(k) {
                    s += (a - b.to_f64()).abs();
                }
                -s
            }
        }
    } else {
        let mut s = 0.0;
        for (a, b) in q.iter().zip(k) {
            s += a * b.to_f64();
        }
        s
    }
}

/// Gradients of `g(q, k)` with respect to `q` and `k`. The distance gradient
/// at `q = k` is taken to be zero.
pub fn similarity_grad(kind: ModelKind, norm: Norm, q: &[f64], k: &[f64]) -> (Vec<f64>, Vec<f64>) {
    if kind.is_distance() {
        let diff: Vec<f64> = q.iter().zip(k).map(|(a, b)| a - b).collect();
        let gq: Vec<f64> = match norm {
            Norm::L2 => {
                let n = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
                if n == 0.0 {
                    vec![0.0; q.len()]
                } else {
                    diff.iter().map(|d| -d / n).collect()
                }
            }
            Norm::L1 => diff
                .iter()
                .map(|&d| if d == 0.0 { 0.0 } else { -d.signum() })
                .collect(),
        };
        let gk = gq.iter().map(|g| -g).collect();
        (gq, gk)
    } else {
        (k.to_vec(), q.to_vec())
    }
}

fn to_f64<F: Real>(v: &[F]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64()).collect()
}

impl<F: Real> ParameterStore<F> {
    /// `q = W_{r,1} h + b_r`, realified.
    pub fn query_embed(&self, h: u32, r: u32) -> Vec<f64> {
        self.project(self.entity(h), r)
    }

    /// Applies the relation operator of `r` to an arbitrary realified row.
    pub(crate) fn project(&self, row: &[F], r: u32) -> Vec<f64> {
        let rel = self.relation(r);
        let d = self.dim;
        match self.kind {
            ModelKind::TransE => row
                .iter()
                .zip(rel)
                .map(|(h, r)| h.to_f64() + r.to_f64())
                .collect(),
            ModelKind::DistMult => row
                .iter()
                .zip(rel)
                .map(|(h, r)| h.to_f64() * r.to_f64())
                .collect(),
            ModelKind::ComplEx | ModelKind::RotatE => {
                let mut q = vec![0.0; 2 * d];
                for i in 0..d {
                    let (a, b) = self.rotation_or_complex(rel, i);
                    let (c, e) = (row[i].to_f64(), row[d + i].to_f64());
                    q[i] = a * c - b * e;
                    q[d + i] = a * e + b * c;
                }
                q
            }
        }
    }

    #[inline]
    fn rotation_or_complex(&self, rel: &[F], i: usize) -> (f64, f64) {
        if self.kind == ModelKind::RotatE {
            let (s, c) = rel[i].to_f64().sin_cos();
            (c, s)
        } else {
            (rel[i].to_f64(), rel[self.dim + i].to_f64())
        }
    }

    /// `k = W_{r,2} t`; the identity for every shipped model.
    pub fn answer_embed(&self, t: u32, _r: u32) -> Vec<f64> {
        to_f64(self.entity(t))
    }

    pub fn score_fg(&self, h: u32, r: u32, t: u32) -> f64 {
        let q = self.query_embed(h, r);
        similarity_row(self.kind, self.norm, &q, self.entity(t))
    }

    /// `f_g(h, r, ·)` over every entity; bit-identical to [`Self::score_fg`].
    pub fn score_fg_all(&self, h: u32, r: u32) -> Vec<f64> {
        let q = self.query_embed(h, r);
        self.score_fg_all_from_query(&q)
    }

    pub(crate) fn score_fg_all_from_query(&self, q: &[f64]) -> Vec<f64> {
        let w = self.entity_width();
        self.entities
            .chunks_exact(w)
            .map(|row| similarity_row(self.kind, self.norm, q, row))
            .collect()
    }

    /// Backpropagates `gq = ∂L/∂q` through the projection of `row` by `r`.
    /// Returns the gradient for the row; the relation gradient is added to
    /// `grads` directly.
    pub(crate) fn project_backward(
        &self,
        row: &[F],
        r: u32,
        gq: &[f64],
        grads: &mut Gradients,
    ) -> Vec<f64> {
        let rel = self.relation(r);
        let d = self.dim;
        match self.kind {
            ModelKind::TransE => {
                let gr = grads.relation_row_mut(r);
                for (g, x) in gr.iter_mut().zip(gq) {
                    *g += x;
                }
                gq.to_vec()
            }
            ModelKind::DistMult => {
                let gr = grads.relation_row_mut(r);
                for i in 0..d {
                    gr[i] += gq[i] * row[i].to_f64();
                }
                (0..d).map(|i| gq[i] * rel[i].to_f64()).collect()
            }
            ModelKind::ComplEx | ModelKind::RotatE => {
                let mut gh = vec![0.0; 2 * d];
                let mut gre = vec![0.0; d];
                let mut gim = vec![0.0; d];
                for i in 0..d {
                    let (a, b) = self.rotation_or_complex(rel, i);
                    let (c, e) = (row[i].to_f64(), row[d + i].to_f64());
                    let (g1, g2) = (gq[i], gq[d + i]);
                    gh[i] = g1 * a + g2 * b;
                    gh[d + i] = -g1 * b + g2 * a;
                    gre[i] = g1 * c + g2 * e;
                    gim[i] = -g1 * e + g2 * c;
                }
                let gr = grads.relation_row_mut(r);
                if self.kind == ModelKind::RotatE {
                    for i in 0..d {
                        let (s, c) = rel[i].to_f64().sin_cos();
                        gr[i] += -gre[i] * s + gim[i] * c;
                    }
                } else {
                    for i in 0..d {
                        gr[i] += gre[i];
                        gr[d + i] += gim[i];
                    }
                }
                gh
            }
        }
    }

    /// Accumulates `upstream · ∂f_g(h, r, t)/∂θ` into `grads`, touching only
    /// the rows of `h`, `r` and `t`.
    pub fn grad_fg(&self, h: u32, r: u32, t: u32, upstream: f64, grads: &mut Gradients) {
        if upstream == 0.0 {
            return;
        }
        let q = self.query_embed(h, r);
        let k = self.answer_embed(t, r);
        let (mut gq, gk) = similarity_grad(self.kind, self.norm, &q, &k);
        for g in &mut gq {
            *g *= upstream;
        }
        let gh = self.project_backward(self.entity(h), r, &gq, grads);
        add_into(grads.entity_row_mut(h), &gh);
        let gt = grads.entity_row_mut(t);
        for (g, x) in gt.iter_mut().zip(&gk) {
            *g += upstream * x;
        }
    }
}

pub(crate) fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
