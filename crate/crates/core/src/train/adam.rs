//! Lazy sparse Adam: only rows touched by the current gradient are updated,
//! and their moments are not decayed while untouched.

use crate::model::{Gradients, ParameterStore};
use crate::real::Real;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F: Real = f32> {
    pub(crate) m_ent: Vec<F>,
    pub(crate) v_ent: Vec<F>,
    pub(crate) m_rel: Vec<F>,
    pub(crate) v_rel: Vec<F>,
    pub(crate) m_agg: Vec<F>,
    pub(crate) v_agg: Vec<F>,
    pub(crate) step: u64,
}

#[inline]
fn update<F: Real>(
    params: &mut [F],
    m: &mut [F],
    v: &mut [F],
    g: &[f64],
    lr: f64,
    c1: f64,
    c2: f64,
) {
    for i in 0..params.len() {
        let mi = BETA1 * m[i].to_f64() + (1.0 - BETA1) * g[i];
        let vi = BETA2 * v[i].to_f64() + (1.0 - BETA2) * g[i] * g[i];
        m[i] = F::from_f64(mi);
        v[i] = F::from_f64(vi);
        let delta = lr * (mi / c1) / ((vi / c2).sqrt() + EPSILON);
        params[i] = F::from_f64(params[i].to_f64() - delta);
    }
}

impl<F: Real> AdamState<F> {
    /// Zero moments shaped like `store`.
    pub fn new(store: &ParameterStore<F>) -> Self {
        let agg = store.aggregator().map_or(0, |a| a.len());
        AdamState {
            m_ent: vec![F::default(); store.entity_table().len()],
            v_ent: vec![F::default(); store.entity_table().len()],
            m_rel: vec![F::default(); store.relation_table().len()],
            v_rel: vec![F::default(); store.relation_table().len()],
            m_agg: vec![F::default(); agg],
            v_agg: vec![F::default(); agg],
            step: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// True when the moment arrays match the shapes of `store`.
    pub fn fits(&self, store: &ParameterStore<F>) -> bool {
        let agg = store.aggregator().map_or(0, |a| a.len());
        self.m_ent.len() == store.entity_table().len()
            && self.v_ent.len() == self.m_ent.len()
            && self.m_rel.len() == store.relation_table().len()
            && self.v_rel.len() == self.m_rel.len()
            && self.m_agg.len() == agg
            && self.v_agg.len() == agg
    }

    pub fn moments(&self) -> [&[F]; 6] {
        [
            &self.m_ent,
            &self.v_ent,
            &self.m_rel,
            &self.v_rel,
            &self.m_agg,
            &self.v_agg,
        ]
    }

    pub(crate) fn from_parts(moments: [Vec<F>; 6], step: u64) -> Self {
        let [m_ent, v_ent, m_rel, v_rel, m_agg, v_agg] = moments;
        AdamState {
            m_ent,
            v_ent,
            m_rel,
            v_rel,
            m_agg,
            v_agg,
            step,
        }
    }

    /// Applies one bias-corrected update to the touched rows of `grads` and,
    /// if touched, to the whole aggregator.
    pub fn apply(&mut self, store: &mut ParameterStore<F>, grads: &Gradients, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);

        let ew = store.entity_width();
        let mut rows: Vec<u32> = grads.touched_entities().to_vec();
        rows.sort_unstable();
        for e in rows {
            let span = e as usize * ew..(e as usize + 1) * ew;
            update(
                &mut store.entities[span.clone()],
                &mut self.m_ent[span.clone()],
                &mut self.v_ent[span],
                grads.entity_row(e),
                lr,
                c1,
                c2,
            );
        }
        let rw = store.relation_width();
        let mut rows: Vec<u32> = grads.touched_relations().to_vec();
        rows.sort_unstable();
        for r in rows {
            let span = r as usize * rw..(r as usize + 1) * rw;
            update(
                &mut store.relations[span.clone()],
                &mut self.m_rel[span.clone()],
                &mut self.v_rel[span],
                grads.relation_row(r),
                lr,
                c1,
                c2,
            );
        }
        if grads.aggregator_touched() {
            if let Some(agg) = store.aggregator.as_mut() {
                update(
                    agg.data_mut(),
                    &mut self.m_agg,
                    &mut self.v_agg,
                    grads.aggregator(),
                    lr,
                    c1,
                    c2,
                );
            }
        }
    }
}
