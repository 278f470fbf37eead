//! Reference-answer aggregation and the vertical score `f_c`.
//!
//! For a query `(h, r, ?)` with references `(h_i, r, t_i)`:
//!
//! ```text
//! q    = W_{r,1} h + b_r          k_i = t_i          s_i = q - q_i
//! t_N  = mean_i (W_node k_i + W_edge s_i)
//! t'   = tanh(W_agg [t_N ; q])
//! f_c  = cos(t', t)
//! ```
//!
//! All vectors are realified, so the matrices are real even for complex
//! models.

use rand::Rng;

use crate::model::grad::Gradients;
use crate::model::score::add_into;
use crate::model::store::ParameterStore;
use crate::real::Real;

/// `W_node`, `W_edge` (hidden × width) and `W_agg` (width × (hidden + width)),
/// stored contiguously in that order, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorParams<F: Real = f32> {
    width: usize,
    hidden: usize,
    data: Vec<F>,
}

pub fn aggregator_len(width: usize, hidden: usize) -> usize {
    2 * hidden * width + width * (hidden + width)
}

impl<F: Real> AggregatorParams<F> {
    /// Glorot-uniform initialization.
    pub fn init<R: Rng>(width: usize, hidden: usize, rng: &mut R) -> Self {
        assert!(width > 0 && hidden > 0);
        let node_bound = (6.0 / (hidden + width) as f64).sqrt();
        let agg_bound = (6.0 / (2 * width + hidden) as f64).sqrt();
        let mut data = Vec::with_capacity(aggregator_len(width, hidden));
        for _ in 0..2 * hidden * width {
            data.push(F::from_f64(rng.random_range(-node_bound..=node_bound)));
        }
        for _ in 0..width * (hidden + width) {
            data.push(F::from_f64(rng.random_range(-agg_bound..=agg_bound)));
        }
        AggregatorParams {
            width,
            hidden,
            data,
        }
    }

    pub fn from_parts(width: usize, hidden: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), aggregator_len(width, hidden));
        AggregatorParams {
            width,
            hidden,
            data,
        }
    }

    /// Realified embedding width `d_k`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Hidden aggregation width `d_a`.
    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Parameter count; independent of the number of entities.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    fn node_range(&self) -> std::ops::Range<usize> {
        0..self.hidden * self.width
    }

    fn edge_range(&self) -> std::ops::Range<usize> {
        let n = self.hidden * self.width;
        n..2 * n
    }

    fn agg_range(&self) -> std::ops::Range<usize> {
        2 * self.hidden * self.width..self.data.len()
    }

    pub fn w_node(&self) -> &[F] {
        &self.data[self.node_range()]
    }

    pub fn w_edge(&self) -> &[F] {
        &self.data[self.edge_range()]
    }

    pub fn w_agg(&self) -> &[F] {
        &self.data[self.agg_range()]
    }

    /// Mean-aggregates `(k_i, s_i)` pairs and combines the result with `q`.
    /// An empty reference list gives `t_N = 0`.
    pub fn aggregate(&self, q: &[f64], refs: &[(Vec<f64>, Vec<f64>)]) -> Aggregation {
        let mut t_n = vec![0.0; self.hidden];
        if !refs.is_empty() {
            for (k, s) in refs {
                add_into(&mut t_n, &matvec(self.w_node(), self.hidden, self.width, k));
                add_into(&mut t_n, &matvec(self.w_edge(), self.hidden, self.width, s));
            }
            let inv = 1.0 / refs.len() as f64;
            for x in &mut t_n {
                *x *= inv;
            }
        }
        let mut concat = t_n.clone();
        concat.extend_from_slice(q);
        let t_prime = matvec(self.w_agg(), self.width, self.hidden + self.width, &concat)
            .into_iter()
            .map(f64::tanh)
            .collect();
        Aggregation { t_n, t_prime }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub t_n: Vec<f64>,
    pub t_prime: Vec<f64>,
}

fn matvec<F: Real>(m: &[F], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    m.chunks_exact(cols)
        .map(|row| {
            let mut s = 0.0;
            for (a, b) in row.iter().zip(x) {
                s += a.to_f64() * b;
            }
            s
        })
        .collect()
}

/// `y += Mᵀ x`.
fn matvec_t_into<F: Real>(m: &[F], cols: usize, x: &[f64], y: &mut [f64]) {
    for (row, xi) in m.chunks_exact(cols).zip(x) {
        if *xi == 0.0 {
            continue;
        }
        for (yj, a) in y.iter_mut().zip(row) {
            *yj += a.to_f64() * xi;
        }
    }
}

/// `G += x yᵀ` for a row-major `G`.
fn outer_into(g: &mut [f64], x: &[f64], y: &[f64], scale: f64) {
    for (row, xi) in g.chunks_exact_mut(y.len()).zip(x) {
        let a = xi * scale;
        if a == 0.0 {
            continue;
        }
        for (gj, yj) in row.iter_mut().zip(y) {
            *gj += a * yj;
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
fn cosine_with_norm<F: Real>(a: &[f64], a_norm: f64, b: &[F]) -> f64 {
    let mut dot = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let y = y.to_f64();
        dot += x * y;
        bb += y * y;
    }
    let denom = a_norm * bb.sqrt();
    if denom == 0.0 {
        0.0
    } else {
        dot / denom
    }
}

/// Cosine similarity, defined as 0 when either vector has zero norm.
pub fn cosine<F: Real>(a: &[f64], b: &[F]) -> f64 {
    cosine_with_norm(a, norm(a), b)
}

/// Gradients of `cos(a, b)` with respect to `a` and `b`.
pub fn cosine_grad(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return (vec![0.0; a.len()], vec![0.0; b.len()]);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let c = dot / (na * nb);
    let ga = a
        .iter()
        .zip(b)
        .map(|(x, y)| y / (na * nb) - c * x / (na * na))
        .collect();
    let gb = a
        .iter()
        .zip(b)
        .map(|(x, y)| x / (na * nb) - c * y / (nb * nb))
        .collect();
    (ga, gb)
}

/// Intermediate values of one vertical forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct VerticalForward {
    pub head: u32,
    pub relation: u32,
    pub refs: Vec<(u32, u32)>,
    pub q: Vec<f64>,
    pub keys: Vec<Vec<f64>>,
    pub edges: Vec<Vec<f64>>,
    pub t_n: Vec<f64>,
    pub t_prime: Vec<f64>,
    pub t_prime_norm: f64,
}

impl<F: Real> ParameterStore<F> {
    fn require_aggregator(&self) -> &AggregatorParams<F> {
        self.aggregator
            .as_ref()
            .expect("vertical scoring requires an aggregator")
    }

    /// `s = q(h, r) - q(h_i, r) = W_{r,1}(h - h_i)`, realified.
    pub fn edge_similarity(&self, h: u32, h_i: u32, r: u32) -> Vec<f64> {
        let q = self.query_embed(h, r);
        let qi = self.query_embed(h_i, r);
        q.iter().zip(&qi).map(|(a, b)| a - b).collect()
    }

    /// Aggregates reference triples `(h_i, t_i)` for the query `(h, r, ?)`.
    pub fn vertical_forward(&self, h: u32, r: u32, refs: &[(u32, u32)]) -> VerticalForward {
        let agg = self.require_aggregator();
        let q = self.query_embed(h, r);
        let mut keys = Vec::with_capacity(refs.len());
        let mut edges = Vec::with_capacity(refs.len());
        let mut pairs = Vec::with_capacity(refs.len());
        for &(hi, ti) in refs {
            let k = self.answer_embed(ti, r);
            let qi = self.query_embed(hi, r);
            let s: Vec<f64> = q.iter().zip(&qi).map(|(a, b)| a - b).collect();
            pairs.push((k.clone(), s.clone()));
            keys.push(k);
            edges.push(s);
        }
        let Aggregation { t_n, t_prime } = agg.aggregate(&q, &pairs);
        let t_prime_norm = norm(&t_prime);
        VerticalForward {
            head: h,
            relation: r,
            refs: refs.to_vec(),
            q,
            keys,
            edges,
            t_n,
            t_prime,
            t_prime_norm,
        }
    }

    /// `f_c` of a single candidate tail.
    pub fn score_fc(&self, fwd: &VerticalForward, t: u32) -> f64 {
        cosine_with_norm(&fwd.t_prime, fwd.t_prime_norm, self.entity(t))
    }

    /// `f_c` against every entity; bit-identical to [`Self::score_fc`].
    pub fn score_fc_all(&self, fwd: &VerticalForward) -> Vec<f64> {
        self.entities
            .chunks_exact(self.entity_width())
            .map(|row| cosine_with_norm(&fwd.t_prime, fwd.t_prime_norm, row))
            .collect()
    }

    /// `f = f_c + λ f_g`.
    pub fn score_f(&self, h: u32, r: u32, t: u32, lambda: f64, refs: &[(u32, u32)]) -> f64 {
        let fwd = self.vertical_forward(h, r, refs);
        self.score_fc(&fwd, t) + lambda * self.score_fg(h, r, t)
    }

    /// Backpropagates `Σ_j w_j · f_c(t_j)` through the cosine, the
    /// aggregator and every reference and query row.
    pub fn vertical_backward(
        &self,
        fwd: &VerticalForward,
        candidate_weights: impl IntoIterator<Item = (u32, f64)>,
        grads: &mut Gradients,
    ) {
        let mut g_tp = vec![0.0; fwd.t_prime.len()];
        let mut any = false;
        for (t, w) in candidate_weights {
            if w == 0.0 {
                continue;
            }
            any = true;
            let row: Vec<f64> = self.entity(t).iter().map(|x| x.to_f64()).collect();
            let (ga, gb) = cosine_grad(&fwd.t_prime, &row);
            for (g, x) in g_tp.iter_mut().zip(&ga) {
                *g += w * x;
            }
            let gt = grads.entity_row_mut(t);
            for (g, x) in gt.iter_mut().zip(&gb) {
                *g += w * x;
            }
        }
        if any {
            self.aggregator_backward(fwd, &g_tp, grads);
        }
    }

    fn aggregator_backward(&self, fwd: &VerticalForward, g_tp: &[f64], grads: &mut Gradients) {
        let agg = self.require_aggregator();
        let (width, hidden) = (agg.width, agg.hidden);
        let gz: Vec<f64> = g_tp
            .iter()
            .zip(&fwd.t_prime)
            .map(|(g, t)| g * (1.0 - t * t))
            .collect();
        let mut concat = fwd.t_n.clone();
        concat.extend_from_slice(&fwd.q);

        let mut g_concat = vec![0.0; hidden + width];
        matvec_t_into(agg.w_agg(), hidden + width, &gz, &mut g_concat);
        let (g_tn, g_q_direct) = g_concat.split_at(hidden);

        let (node_r, edge_r, agg_r) = (agg.node_range(), agg.edge_range(), agg.agg_range());
        {
            let ga = grads.aggregator_mut();
            outer_into(&mut ga[agg_r], &gz, &concat, 1.0);
        }

        let mut g_q = g_q_direct.to_vec();
        let n = fwd.refs.len();
        if n > 0 {
            let inv = 1.0 / n as f64;
            {
                let ga = grads.aggregator_mut();
                for (k, s) in fwd.keys.iter().zip(&fwd.edges) {
                    outer_into(&mut ga[node_r.clone()], g_tn, k, inv);
                    outer_into(&mut ga[edge_r.clone()], g_tn, s, inv);
                }
            }
            let mut g_k = vec![0.0; width];
            matvec_t_into(agg.w_node(), width, g_tn, &mut g_k);
            let mut g_s = vec![0.0; width];
            matvec_t_into(agg.w_edge(), width, g_tn, &mut g_s);
            for x in g_k.iter_mut().chain(g_s.iter_mut()) {
                *x *= inv;
            }
            let neg_g_s: Vec<f64> = g_s.iter().map(|x| -x).collect();
            for &(hi, ti) in &fwd.refs {
                add_into(&mut g_q, &g_s);
                add_into(grads.entity_row_mut(ti), &g_k);
                let ghi = self.project_backward(self.entity(hi), fwd.relation, &neg_g_s, grads);
                add_into(grads.entity_row_mut(hi), &ghi);
            }
        }
        let gh = self.project_backward(self.entity(fwd.head), fwd.relation, &g_q, grads);
        add_into(grads.entity_row_mut(fwd.head), &gh);
    }

    /// Forward pass followed by [`Self::vertical_backward`] with the given
    /// per-candidate label weights.
    pub fn grad_vertical(
        &self,
        h: u32,
        r: u32,
        refs: &[(u32, u32)],
        label_weights: &[(u32, f64)],
        grads: &mut Gradients,
    ) {
        let fwd = self.vertical_forward(h, r, refs);
        self.vertical_backward(&fwd, label_weights.iter().copied(), grads);
    }
}
