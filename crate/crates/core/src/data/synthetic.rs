//! Small generated graphs with planted composition rules.
//!
//! Entities form families around a hub `y`. Every member `x` points to its
//! hub (`member_of`), the hub owns a few items `z` (`owns`), and every item
//! has one tag `w` (`tagged`). Two derived relations follow the rules
//!
//! ```text
//! has_item(x, z)  <=  member_of(x, y) ∧ owns(y, z)                 (2 hops)
//! has_tag(x, w)   <=  member_of(x, y) ∧ owns(y, z) ∧ tagged(z, w)  (3 hops)
//! ```
//!
//! A few members per family are held out: all of their derived triples go
//! to validation or test, so those queries can only be answered by applying
//! the rule or by looking at what the siblings of `x` answer. Hubs of
//! neighbouring families are chained (`near`) to keep the graph connected
//! without shortening any rule path. Optional `likes` links from members to
//! shared topic entities add noise; they are off by default because they
//! put members of unrelated families at the same distance as siblings.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::data::graph::{KnowledgeGraph, Triple, Vocabulary};
use crate::rng::derived_rng;

const PURPOSE_SYNTHETIC: u64 = 0x7379_6e74;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositionalSpec {
    pub families: usize,
    pub members: usize,
    pub items: usize,
    /// Members per family whose derived triples are all held out.
    pub held_out: usize,
    pub topics: usize,
    pub likes: usize,
    pub seed: u64,
}

impl Default for CompositionalSpec {
    /// 20 families of 10 entities: 200 in total.
    fn default() -> Self {
        CompositionalSpec {
            families: 20,
            members: 5,
            items: 2,
            held_out: 2,
            topics: 0,
            likes: 0,
            seed: 0,
        }
    }
}

impl CompositionalSpec {
    pub fn num_entities(&self) -> usize {
        self.families * (1 + self.members + 2 * self.items) + self.topics
    }
}

pub const MEMBER_OF: u32 = 0;
pub const OWNS: u32 = 1;
pub const TAGGED: u32 = 2;
pub const NEAR: u32 = 3;
pub const HAS_ITEM: u32 = 4;
pub const HAS_TAG: u32 = 5;
pub const LIKES: u32 = 6;

const RELATION_NAMES: [&str; 7] = [
    "member_of",
    "owns",
    "tagged",
    "near",
    "has_item",
    "has_tag",
    "likes",
];

/// Builds the graph described in the module docs. Held-out derived triples
/// alternate between validation and test.
pub fn compositional_kg(spec: &CompositionalSpec) -> KnowledgeGraph {
    assert!(
        spec.members > spec.held_out,
        "every family needs a training member"
    );
    assert!(spec.likes <= spec.topics, "not enough topics");
    let mut rng = derived_rng(spec.seed, PURPOSE_SYNTHETIC, 0);
    let n = spec.num_entities();

    // Shuffle ids so that family structure is not visible in the numbering.
    let mut ids: Vec<u32> = (0..n as u32).collect();
    ids.shuffle(&mut rng);
    let mut next = ids.into_iter();
    let mut take = || next.next().expect("id budget matches the layout");

    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    let mut hubs = Vec::with_capacity(spec.families);
    let topics: Vec<u32> = (0..spec.topics).map(|_| take()).collect();
    let mut flip = false;
    for _ in 0..spec.families {
        let y = take();
        hubs.push(y);
        let members: Vec<u32> = (0..spec.members).map(|_| take()).collect();
        let items: Vec<u32> = (0..spec.items).map(|_| take()).collect();
        let tags: Vec<u32> = (0..spec.items).map(|_| take()).collect();
        for &x in &members {
            train.push(Triple::new(x, MEMBER_OF, y));
            for &topic in topics.choose_multiple(&mut rng, spec.likes) {
                train.push(Triple::new(x, LIKES, topic));
            }
        }
        for (&z, &w) in items.iter().zip(&tags) {
            train.push(Triple::new(y, OWNS, z));
            train.push(Triple::new(z, TAGGED, w));
        }
        let mut order = members.clone();
        order.shuffle(&mut rng);
        let held: Vec<u32> = order[..spec.held_out].to_vec();
        for &x in &members {
            let derived = items
                .iter()
                .map(|&z| Triple::new(x, HAS_ITEM, z))
                .chain(tags.iter().map(|&w| Triple::new(x, HAS_TAG, w)));
            for t in derived {
                if held.contains(&x) {
                    if flip {
                        valid.push(t);
                    } else {
                        test.push(t);
                    }
                    flip = !flip;
                } else {
                    train.push(t);
                }
            }
        }
    }
    for w in hubs.windows(2) {
        train.push(Triple::new(w[0], NEAR, w[1]));
    }
    // One extra random hub link keeps the chain from being a pure path.
    if hubs.len() > 2 {
        let a = hubs[rng.random_range(0..hubs.len())];
        let b = hubs[rng.random_range(0..hubs.len())];
        if a != b {
            train.push(Triple::new(a, NEAR, b));
        }
    }

    let entities: Vec<String> = (0..n).map(|i| format!("e{i:03}")).collect();
    let relations = RELATION_NAMES.iter().map(|s| s.to_string());
    let vocab = Vocabulary::new(entities, relations);
    let rel = |r: u32| {
        vocab
            .relation_id(RELATION_NAMES[r as usize])
            .expect("relation present")
    };
    let remap = |ts: Vec<Triple>| -> Vec<Triple> {
        ts.into_iter()
            .map(|t| Triple::new(t.head, rel(t.relation), t.tail))
            .collect()
    };
    let (train, valid, test) = (remap(train), remap(valid), remap(test));
    KnowledgeGraph::from_triples(vocab, train, valid, test)
}
