use std::f64::consts::PI;

use rand::Rng;

use crate::model::grad::Gradients;
use crate::model::kind::{ModelKind, Norm};
use crate::real::Real;
use crate::rng::{derived_rng, PURPOSE_AGGREGATOR, PURPOSE_INIT};
use crate::vlp::aggregate::AggregatorParams;

/// Entity and relation tables, plus the optional reference aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore<F: Real = f32> {
    pub(crate) kind: ModelKind,
    pub(crate) norm: Norm,
    pub(crate) dim: usize,
    pub(crate) num_entities: usize,
    pub(crate) num_relations: usize,
    pub(crate) entities: Vec<F>,
    pub(crate) relations: Vec<F>,
    pub(crate) aggregator: Option<AggregatorParams<F>>,
}

/// Uniform init bound: `(γ + 2) / d` for distance models, `6 / √d` otherwise.
pub fn init_bound(kind: ModelKind, dim: usize, gamma: f64) -> f64 {
    if kind.is_distance() {
        (gamma + 2.0) / dim as f64
    } else {
        6.0 / (dim as f64).sqrt()
    }
}

impl<F: Real> ParameterStore<F> {
    /// Draws every table entry from the seeded stream. RotatE phases are
    /// uniform on [-π, π].
    pub fn init(
        kind: ModelKind,
        dim: usize,
        num_entities: usize,
        num_relations: usize,
        gamma: f64,
        seed: u64,
    ) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        let mut rng = derived_rng(seed, PURPOSE_INIT, 0);
        let bound = init_bound(kind, dim, gamma);
        let entities = (0..num_entities * kind.entity_width(dim))
            .map(|_| F::from_f64(rng.random_range(-bound..=bound)))
            .collect();
        let relations = (0..num_relations * kind.relation_width(dim))
            .map(|_| {
                let v = if kind == ModelKind::RotatE {
                    rng.random_range(-PI..=PI)
                } else {
                    rng.random_range(-bound..=bound)
                };
                F::from_f64(v)
            })
            .collect();
        ParameterStore {
            kind,
            norm: Norm::L2,
            dim,
            num_entities,
            num_relations,
            entities,
            relations,
            aggregator: None,
        }
    }

    /// Builds a store from explicit tables; rows must match the model widths.
    pub fn from_tables(kind: ModelKind, dim: usize, entities: Vec<F>, relations: Vec<F>) -> Self {
        let ew = kind.entity_width(dim);
        let rw = kind.relation_width(dim);
        assert_eq!(entities.len() % ew, 0, "entity table width mismatch");
        assert_eq!(relations.len() % rw, 0, "relation table width mismatch");
        ParameterStore {
            kind,
            norm: Norm::L2,
            dim,
            num_entities: entities.len() / ew,
            num_relations: relations.len() / rw,
            entities,
            relations,
            aggregator: None,
        }
    }

    /// Only TransE honours the L1 norm; the other models keep L2.
    pub fn with_norm(mut self, norm: Norm) -> Self {
        if self.kind == ModelKind::TransE {
            self.norm = norm;
        }
        self
    }

    /// Attaches a freshly initialized aggregator of hidden width `hidden`.
    pub fn with_aggregator(mut self, hidden: usize, seed: u64) -> Self {
        let mut rng = derived_rng(seed, PURPOSE_AGGREGATOR, 0);
        self.aggregator = Some(AggregatorParams::init(
            self.entity_width(),
            hidden,
            &mut rng,
        ));
        self
    }

    pub fn set_aggregator(&mut self, aggregator: Option<AggregatorParams<F>>) {
        if let Some(a) = &aggregator {
            assert_eq!(a.width(), self.entity_width(), "aggregator width mismatch");
        }
        self.aggregator = aggregator;
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    /// Realified entity width `d_k`.
    pub fn entity_width(&self) -> usize {
        self.kind.entity_width(self.dim)
    }

    pub fn relation_width(&self) -> usize {
        self.kind.relation_width(self.dim)
    }

    pub fn entity(&self, e: u32) -> &[F] {
        let w = self.entity_width();
        &self.entities[e as usize * w..(e as usize + 1) * w]
    }

    pub fn relation(&self, r: u32) -> &[F] {
        let w = self.relation_width();
        &self.relations[r as usize * w..(r as usize + 1) * w]
    }

    pub fn entity_mut(&mut self, e: u32) -> &mut [F] {
        let w = self.entity_width();
        &mut self.entities[e as usize * w..(e as usize + 1) * w]
    }

    pub fn relation_mut(&mut self, r: u32) -> &mut [F] {
        let w = self.relation_width();
        &mut self.relations[r as usize * w..(r as usize + 1) * w]
    }

    pub fn entity_table(&self) -> &[F] {
        &self.entities
    }

    pub fn relation_table(&self) -> &[F] {
        &self.relations
    }

    pub fn aggregator(&self) -> Option<&AggregatorParams<F>> {
        self.aggregator.as_ref()
    }

    pub fn aggregator_mut(&mut self) -> Option<&mut AggregatorParams<F>> {
        self.aggregator.as_mut()
    }

    pub fn new_gradients(&self) -> Gradients {
        Gradients::new(
            self.num_entities,
            self.entity_width(),
            self.num_relations,
            self.relation_width(),
            self.aggregator.as_ref().map_or(0, |a| a.len()),
        )
    }

    /// Every trainable scalar as a flat mutable view, in checkpoint order.
    /// Used by numerical gradient checks.
    pub fn parameters_mut(&mut self) -> Vec<&mut F> {
        let mut out: Vec<&mut F> = self.entities.iter_mut().collect();
        out.extend(self.relations.iter_mut());
        if let Some(a) = &mut self.aggregator {
            out.extend(a.data_mut().iter_mut());
        }
        out
    }

    /// Gradients flattened in the order of [`Self::parameters_mut`].
    pub fn flatten_gradients(&self, g: &Gradients) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.entities.len() + self.relations.len());
        for e in 0..self.num_entities as u32 {
            out.extend_from_slice(g.entity_row(e));
        }
        for r in 0..self.num_relations as u32 {
            out.extend_from_slice(g.relation_row(r));
        }
        if self.aggregator.is_some() {
            out.extend_from_slice(g.aggregator());
        }
        out
    }

    /// Effective complex relation moduli (RotatE only; empty otherwise).
    pub fn rotation_moduli(&self, r: u32) -> Vec<f64> {
        if self.kind != ModelKind::RotatE {
            return Vec::new();
        }
        self.relation(r)
            .iter()
            .map(|p| {
                let (s, c) = p.to_f64().sin_cos();
                (c * c + s * s).sqrt()
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        let finite = |v: &[F]| v.iter().all(|x| x.to_f64().is_finite());
        finite(&self.entities)
            && finite(&self.relations)
            && self.aggregator.as_ref().is_none_or(|a| finite(a.data()))
    }
}
