//! Test-set partitions used by the fine-grained reports.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::data::distance::DistanceIndex;
use crate::data::graph::{KnowledgeGraph, RelationId, Triple};

/// Head-tail training distance bucket: 1, 2, 3, or 4 and beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistanceBucket {
    One,
    Two,
    Three,
    FourPlus,
}

impl DistanceBucket {
    pub const ALL: [DistanceBucket; 4] = [
        DistanceBucket::One,
        DistanceBucket::Two,
        DistanceBucket::Three,
        DistanceBucket::FourPlus,
    ];

    /// Self-loops (distance 0) fall in the first bucket.
    pub fn from_distance(d: u8) -> Self {
        match d {
            0 | 1 => DistanceBucket::One,
            2 => DistanceBucket::Two,
            3 => DistanceBucket::Three,
            _ => DistanceBucket::FourPlus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DistanceBucket::One => "1",
            DistanceBucket::Two => "2",
            DistanceBucket::Three => "3",
            DistanceBucket::FourPlus => ">=4",
        }
    }
}

impl fmt::Display for DistanceBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn distance_split(
    kg: &KnowledgeGraph,
    dist: &DistanceIndex,
) -> BTreeMap<DistanceBucket, Vec<Triple>> {
    let mut out: BTreeMap<DistanceBucket, Vec<Triple>> = DistanceBucket::ALL
        .iter()
        .map(|&b| (b, Vec::new()))
        .collect();
    for t in kg.test() {
        let b = DistanceBucket::from_distance(dist.distance(t.head, t.tail));
        out.get_mut(&b).unwrap().push(*t);
    }
    out
}

/// Relation mapping property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MappingClass {
    OneToOne,
    OneToMany,
    ManyToOne,
    ManyToMany,
}

impl MappingClass {
    pub const ALL: [MappingClass; 4] = [
        MappingClass::OneToOne,
        MappingClass::OneToMany,
        MappingClass::ManyToOne,
        MappingClass::ManyToMany,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MappingClass::OneToOne => "1-to-1",
            MappingClass::OneToMany => "1-to-N",
            MappingClass::ManyToOne => "N-to-1",
            MappingClass::ManyToMany => "N-to-N",
        }
    }

    fn mirrored(self) -> Self {
        match self {
            MappingClass::OneToMany => MappingClass::ManyToOne,
            MappingClass::ManyToOne => MappingClass::OneToMany,
            c => c,
        }
    }
}

pub const RMP_THRESHOLD: f64 = 1.5;

/// Tails-per-head and heads-per-tail of a set of pairs.
pub fn mapping_ratios(pairs: &[(u32, u32)]) -> (f64, f64) {
    let unique: HashSet<(u32, u32)> = pairs.iter().copied().collect();
    let heads: HashSet<u32> = unique.iter().map(|p| p.0).collect();
    let tails: HashSet<u32> = unique.iter().map(|p| p.1).collect();
    let n = unique.len() as f64;
    (n / heads.len() as f64, n / tails.len() as f64)
}

fn classify_pairs(pairs: &[(u32, u32)]) -> MappingClass {
    let (tph, hpt) = mapping_ratios(pairs);
    match (tph >= RMP_THRESHOLD, hpt >= RMP_THRESHOLD) {
        (false, false) => MappingClass::OneToOne,
        (true, false) => MappingClass::OneToMany,
        (false, true) => MappingClass::ManyToOne,
        (true, true) => MappingClass::ManyToMany,
    }
}

/// Classifies every relation id of `kg` from its training pairs. A relation
/// without training pairs borrows the mirrored class of its reciprocal, or
/// defaults to 1-to-1.
pub fn rmp_classify(kg: &KnowledgeGraph) -> Vec<MappingClass> {
    let nr = kg.num_relations();
    let base = kg.num_base_relations() as RelationId;
    (0..nr as RelationId)
        .map(|r| {
            let pairs = kg.relation_pairs(r);
            if !pairs.is_empty() {
                return classify_pairs(pairs);
            }
            let partner = if !kg.is_augmented() {
                None
            } else if r >= base {
                Some(r - base)
            } else {
                Some(r + base)
            };
            match partner.map(|p| kg.relation_pairs(p)) {
                Some(p) if !p.is_empty() => classify_pairs(p).mirrored(),
                _ => MappingClass::OneToOne,
            }
        })
        .collect()
}
