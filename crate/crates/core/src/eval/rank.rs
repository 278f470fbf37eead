//! Candidate scoring and filtered ranking.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{
    DistanceBucket, DistanceIndex, FilterIndex, KnowledgeGraph, MappingClass, Triple,
};
use crate::error::{Error, Result};
use crate::model::ParameterStore;
use crate::real::Real;
use crate::vlp::ReferenceTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ScoreMode {
    /// `f_c + λ f_g`; falls back to `f_g` for models without an aggregator.
    #[default]
    Combined,
    FgOnly,
    FcOnly,
}

impl ScoreMode {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMode::Combined => "combined",
            ScoreMode::FgOnly => "fg-only",
            ScoreMode::FcOnly => "fc-only",
        }
    }
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "combined" | "f" => Ok(ScoreMode::Combined),
            "fg-only" | "fg" => Ok(ScoreMode::FgOnly),
            "fc-only" | "fc" => Ok(ScoreMode::FcOnly),
            _ => Err(format!(
                "unknown score mode '{s}' (expected combined, fg-only or fc-only)"
            )),
        }
    }
}

/// Scores every candidate tail of a query under one [`ScoreMode`].
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a, F: Real = f32> {
    store: &'a ParameterStore<F>,
    refs: Option<&'a ReferenceTable>,
    lambda: f64,
    mode: ScoreMode,
}

impl<'a, F: Real> Scorer<'a, F> {
    pub fn new(
        store: &'a ParameterStore<F>,
        refs: Option<&'a ReferenceTable>,
        lambda: f64,
        mode: ScoreMode,
    ) -> Result<Self> {
        let vertical = store.aggregator().is_some() && refs.is_some();
        if mode == ScoreMode::FcOnly && !vertical {
            return Err(Error::InvalidConfig(vec![
                "fc-only scoring needs a model with an aggregator and a reference table".into(),
            ]));
        }
        if store.aggregator().is_some() && refs.is_none() && mode == ScoreMode::Combined {
            return Err(Error::InvalidConfig(vec![
                "combined scoring of a reference model needs a reference table".into(),
            ]));
        }
        Ok(Scorer {
            store,
            refs,
            lambda,
            mode,
        })
    }

    /// The mode actually applied after the horizontal-only fallback.
    pub fn effective_mode(&self) -> ScoreMode {
        match (self.mode, self.store.aggregator()) {
            (ScoreMode::Combined, None) => ScoreMode::FgOnly,
            (m, _) => m,
        }
    }

    pub fn scores(&self, h: u32, r: u32) -> Vec<f64> {
        let vertical = || {
            let refs = self
                .refs
                .expect("checked in Scorer::new")
                .references(h, r, None);
            let fwd = self.store.vertical_forward(h, r, &refs);
            self.store.score_fc_all(&fwd)
        };
        match self.effective_mode() {
            ScoreMode::FgOnly => self.store.score_fg_all(h, r),
            ScoreMode::FcOnly => vertical(),
            ScoreMode::Combined => {
                let mut fc = vertical();
                let fg = self.store.score_fg_all(h, r);
                for (c, g) in fc.iter_mut().zip(fg) {
                    *c += self.lambda * g;
                }
                fc
            }
        }
    }
}

/// Rank of `gold` among candidates not in `known` (the gold itself is always
/// kept): `1 + #greater + #ties / 2`.
pub fn filtered_rank(scores: &[f64], gold: u32, known: &[u32]) -> f64 {
    let s = scores[gold as usize];
    let mut greater = 0usize;
    let mut ties = 0usize;
    for (e, &x) in scores.iter().enumerate() {
        let e = e as u32;
        if e == gold || x < s {
            continue;
        }
        if known.binary_search(&e).is_ok() {
            continue;
        }
        if x > s {
            greater += 1;
        } else if x == s {
            ties += 1;
        }
    }
    1.0 + greater as f64 + ties as f64 / 2.0
}

pub fn unfiltered_rank(scores: &[f64], gold: u32) -> f64 {
    filtered_rank(scores, gold, &[])
}

/// One ranked test triple.
#[derive(Debug, Clone, PartialEq)]
pub struct RankResult {
    pub triple: Triple,
    pub rank: f64,
    pub bucket: DistanceBucket,
    /// Relation id with reciprocal ids folded onto their base relation.
    pub base_relation: u32,
    /// True for reciprocal triples, i.e. head prediction of the base triple.
    pub head_direction: bool,
    pub class: MappingClass,
}

/// Ranks every triple in `triples` in parallel; output order follows input.
pub fn rank_triples<F: Real>(
    kg: &KnowledgeGraph,
    dist: &DistanceIndex,
    filter: &FilterIndex,
    classes: &[MappingClass],
    scorer: &Scorer<'_, F>,
    triples: &[Triple],
) -> Vec<RankResult> {
    triples
        .par_iter()
        .map(|&t| {
            let scores = scorer.scores(t.head, t.relation);
            let rank = filtered_rank(&scores, t.tail, filter.known_tails(t.head, t.relation));
            let (base, reciprocal) = kg.base_relation(t.relation);
            RankResult {
                triple: t,
                rank,
                bucket: DistanceBucket::from_distance(dist.distance(t.head, t.tail)),
                base_relation: base,
                head_direction: reciprocal,
                class: classes[base as usize],
            }
        })
        .collect()
}
