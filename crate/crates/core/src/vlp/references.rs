//! Graph-distance based reference selection.
//!
//! For a query `(h, r, ?)` the references are training triples `(h_i, r, t_i)`
//! ranked by `d_g(h, h_i)` ascending, ties broken by the training frequency
//! of `h_i` (descending), then `h_i` id, then `t_i` id. One extra candidate
//! is stored per key so that a training query can mask its own triple and
//! still see `N` references.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::data::distance::{read_u32, read_u64, DistanceIndex};
use crate::data::graph::{EntityId, KnowledgeGraph, RelationId};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VLPR";
const VERSION: u32 = 1;

pub type ReferencePair = (EntityId, EntityId);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceTable {
    n: usize,
    entries: HashMap<(EntityId, RelationId), Vec<ReferencePair>>,
}

impl ReferenceTable {
    /// Selects references for every `(h, r)` that occurs as a query in any
    /// split of `kg`.
    pub fn select(kg: &KnowledgeGraph, dist: &DistanceIndex, n: usize) -> Self {
        assert!(n < u8::MAX as usize, "reference count must fit in a byte");
        let keep = n + 1;
        let ne = kg.num_entities();
        let nr = kg.num_relations();

        let mut frequency = vec![0u32; ne];
        for t in kg.train() {
            frequency[t.head as usize] += 1;
        }
        let mut tails: HashMap<(EntityId, RelationId), Vec<EntityId>> = HashMap::new();
        for t in kg.train() {
            tails.entry((t.head, t.relation)).or_default().push(t.tail);
        }
        for v in tails.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        let by_rank = |a: &EntityId, b: &EntityId| {
            frequency[*b as usize]
                .cmp(&frequency[*a as usize])
                .then(a.cmp(b))
        };
        let mut relation_heads: Vec<Vec<EntityId>> = vec![Vec::new(); nr];
        for &(h, r) in tails.keys() {
            relation_heads[r as usize].push(h);
        }
        for heads in &mut relation_heads {
            heads.sort_unstable_by(by_rank);
        }

        let mut keys_by_head: HashMap<EntityId, Vec<RelationId>> = HashMap::new();
        for t in kg.train().iter().chain(kg.valid()).chain(kg.test()) {
            keys_by_head.entry(t.head).or_default().push(t.relation);
        }
        let mut heads: Vec<(EntityId, Vec<RelationId>)> = keys_by_head.into_iter().collect();
        heads.sort_unstable_by_key(|(h, _)| *h);
        for (_, rels) in &mut heads {
            rels.sort_unstable();
            rels.dedup();
        }

        let entries: Vec<((EntityId, RelationId), Vec<ReferencePair>)> = heads
            .par_iter()
            .flat_map_iter(|(h, rels)| {
                let levels = dist.row_by_distance(*h);
                let (row_ids, _) = dist.row(*h);
                rels.iter()
                    .map(|&r| {
                        let refs = select_for(
                            &levels,
                            row_ids,
                            r,
                            keep,
                            &tails,
                            &relation_heads[r as usize],
                            &by_rank,
                        );
                        ((*h, r), refs)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();

        ReferenceTable {
            n,
            entries: entries.into_iter().collect(),
        }
    }

    /// Configured reference count `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All stored candidates for a key (up to `N + 1`).
    pub fn candidates(&self, head: EntityId, relation: RelationId) -> &[ReferencePair] {
        self.entries
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// The first `N` references of `(head, relation)`, skipping the triple
    /// `(head, relation, masked_tail)` when given.
    pub fn references(
        &self,
        head: EntityId,
        relation: RelationId,
        masked_tail: Option<EntityId>,
    ) -> Vec<ReferencePair> {
        self.candidates(head, relation)
            .iter()
            .copied()
            .filter(|&(hi, ti)| !(hi == head && Some(ti) == masked_tail))
            .take(self.n)
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W, dataset_hash: u64, cap: u8) -> Result<()> {
        let io = |e| Error::io("writing reference cache", e);
        let mut keys: Vec<_> = self.entries.keys().copied().collect();
        keys.sort_unstable();
        let mut buf = Vec::with_capacity(32);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n as u32).to_le_bytes());
        buf.extend_from_slice(&(keys.len() as u64).to_le_bytes());
        buf.extend_from_slice(&dataset_hash.to_le_bytes());
        buf.extend_from_slice(&(cap as u32).to_le_bytes());
        w.write_all(&buf).map_err(io)?;
        for key in keys {
            let list = &self.entries[&key];
            buf.clear();
            buf.extend_from_slice(&key.0.to_le_bytes());
            buf.extend_from_slice(&key.1.to_le_bytes());
            buf.push(list.len() as u8);
            for (hi, ti) in list {
                buf.extend_from_slice(&hi.to_le_bytes());
                buf.extend_from_slice(&ti.to_le_bytes());
            }
            w.write_all(&buf).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Reads a cache, returning the table, dataset hash and distance cap.
    pub fn read_from<R: Read>(mut r: R) -> Result<(Self, u64, u8)> {
        let bad = |m: &str| Error::format("reference cache", m);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = read_u32(&mut r).map_err(|_| bad("truncated header"))?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let n = read_u32(&mut r).map_err(|_| bad("truncated header"))? as usize;
        let count = read_u64(&mut r).map_err(|_| bad("truncated header"))?;
        let hash = read_u64(&mut r).map_err(|_| bad("truncated header"))?;
        let cap = read_u32(&mut r).map_err(|_| bad("truncated header"))?;
        if cap == 0 || cap > u8::MAX as u32 || n >= u8::MAX as usize {
            return Err(bad("header field out of range"));
        }
        let mut entries = HashMap::new();
        for _ in 0..count {
            let h = read_u32(&mut r).map_err(|_| bad("truncated entry"))?;
            let rel = read_u32(&mut r).map_err(|_| bad("truncated entry"))?;
            let mut len = [0u8; 1];
            r.read_exact(&mut len).map_err(|_| bad("truncated entry"))?;
            if len[0] as usize > n + 1 {
                return Err(bad("reference list longer than N + 1"));
            }
            let mut list = Vec::with_capacity(len[0] as usize);
            for _ in 0..len[0] {
                let hi = read_u32(&mut r).map_err(|_| bad("truncated entry"))?;
                let ti = read_u32(&mut r).map_err(|_| bad("truncated entry"))?;
                list.push((hi, ti));
            }
            entries.insert((h, rel), list);
        }
        Ok((ReferenceTable { n, entries }, hash, cap as u8))
    }
}

fn select_for(
    levels: &[(u8, EntityId)],
    row_ids: &[EntityId],
    r: RelationId,
    keep: usize,
    tails: &HashMap<(EntityId, RelationId), Vec<EntityId>>,
    relation_heads: &[EntityId],
    by_rank: &impl Fn(&EntityId, &EntityId) -> std::cmp::Ordering,
) -> Vec<ReferencePair> {
    let mut out = Vec::with_capacity(keep);
    let push_head = |out: &mut Vec<ReferencePair>, hi: EntityId| {
        if let Some(ts) = tails.get(&(hi, r)) {
            for &ti in ts {
                if out.len() == keep {
                    break;
                }
                out.push((hi, ti));
            }
        }
    };

    let mut level_heads: Vec<EntityId> = Vec::new();
    let mut i = 0;
    while i < levels.len() && out.len() < keep {
        let d = levels[i].0;
        level_heads.clear();
        while i < levels.len() && levels[i].0 == d {
            let e = levels[i].1;
            if tails.contains_key(&(e, r)) {
                level_heads.push(e);
            }
            i += 1;
        }
        level_heads.sort_unstable_by(by_rank);
        for &hi in &level_heads {
            push_head(&mut out, hi);
        }
    }

    // Heads at or beyond the distance cap, in tie-break order.
    for &hi in relation_heads {
        if out.len() == keep {
            break;
        }
        if row_ids.binary_search(&hi).is_err() {
            push_head(&mut out, hi);
        }
    }
    out
}
