//! Capped shortest-hop distances over the undirected training graph.
//!
//! Rows are stored sparsely: only pairs closer than `cap` are kept, and any
//! absent pair reads back as `cap`. Unreachable pairs therefore share the cap
//! value with pairs that are exactly `cap` hops apart.

use std::collections::VecDeque;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::data::graph::{EntityId, KnowledgeGraph};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VLPD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceIndex {
    cap: u8,
    offsets: Vec<usize>,
    entities: Vec<EntityId>,
    distances: Vec<u8>,
}

/// Undirected, relation-agnostic, duplicate-free neighbour lists.
pub fn undirected_neighbors(kg: &KnowledgeGraph) -> Vec<Vec<EntityId>> {
    (0..kg.num_entities() as EntityId)
        .map(|e| {
            let mut n: Vec<EntityId> = kg
                .adjacency(e)
                .iter()
                .map(|edge| edge.neighbor)
                .filter(|&x| x != e)
                .collect();
            n.sort_unstable();
            n.dedup();
            n
        })
        .collect()
}

impl DistanceIndex {
    /// Breadth-first search from every entity, truncated at `cap` hops.
    pub fn compute(kg: &KnowledgeGraph, cap: u8) -> Self {
        assert!(cap >= 1, "distance cap must be at least 1");
        let neighbors = undirected_neighbors(kg);
        Self::from_neighbors(&neighbors, cap)
    }

    pub fn from_neighbors(neighbors: &[Vec<EntityId>], cap: u8) -> Self {
        let n = neighbors.len();
        let rows: Vec<Vec<(EntityId, u8)>> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![u8::MAX; n], VecDeque::new(), Vec::new()),
                |(dist, queue, touched), src| {
                    bfs_row(neighbors, src as EntityId, cap, dist, queue, touched)
                },
            )
            .collect();

        let mut offsets = Vec::with_capacity(n + 1);
        let total: usize = rows.iter().map(Vec::len).sum();
        let mut entities = Vec::with_capacity(total);
        let mut distances = Vec::with_capacity(total);
        offsets.push(0);
        for row in rows {
            for (e, d) in row {
                entities.push(e);
                distances.push(d);
            }
            offsets.push(entities.len());
        }
        DistanceIndex {
            cap,
            offsets,
            entities,
            distances,
        }
    }

    pub fn cap(&self) -> u8 {
        self.cap
    }

    pub fn num_entities(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Entities strictly closer than the cap, sorted by id, with distances.
    pub fn row(&self, src: EntityId) -> (&[EntityId], &[u8]) {
        let (a, b) = (self.offsets[src as usize], self.offsets[src as usize + 1]);
        (&self.entities[a..b], &self.distances[a..b])
    }

    pub fn distance(&self, a: EntityId, b: EntityId) -> u8 {
        let (ents, dists) = self.row(a);
        match ents.binary_search(&b) {
            Ok(i) => dists[i],
            Err(_) => self.cap,
        }
    }

    /// Entities of `src`'s explicit row ordered by (distance, id).
    pub fn row_by_distance(&self, src: EntityId) -> Vec<(u8, EntityId)> {
        let (ents, dists) = self.row(src);
        let mut v: Vec<(u8, EntityId)> = dists.iter().copied().zip(ents.iter().copied()).collect();
        v.sort_unstable();
        v
    }

    /// Number of explicitly stored pairs.
    pub fn stored_pairs(&self) -> usize {
        self.entities.len()
    }

    pub fn write_to<W: Write>(&self, mut w: W, dataset_hash: u64) -> Result<()> {
        let io = |e| Error::io("writing distance cache", e);
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.cap as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.num_entities() as u64).to_le_bytes())
            .map_err(io)?;
        w.write_all(&dataset_hash.to_le_bytes()).map_err(io)?;
        let mut buf = Vec::new();
        for src in 0..self.num_entities() {
            let (ents, dists) = self.row(src as EntityId);
            buf.clear();
            buf.extend_from_slice(&(ents.len() as u32).to_le_bytes());
            for (e, d) in ents.iter().zip(dists) {
                buf.extend_from_slice(&e.to_le_bytes());
                buf.push(*d);
            }
            w.write_all(&buf).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Reads a cache file, returning the index and the dataset hash it was
    /// built from.
    pub fn read_from<R: Read>(mut r: R) -> Result<(Self, u64)> {
        let bad = |m: &str| Error::format("distance cache", m);
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
        let cap = read_u32(&mut r).map_err(|_| bad("truncated header"))?;
        if cap == 0 || cap > u8::MAX as u32 {
            return Err(bad(&format!("cap {cap} out of range")));
        }
        let n = read_u64(&mut r).map_err(|_| bad("truncated header"))? as usize;
        let hash = read_u64(&mut r).map_err(|_| bad("truncated header"))?;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut entities = Vec::new();
        let mut distances = Vec::new();
        offsets.push(0);
        let mut pair = [0u8; 5];
        for _ in 0..n {
            let len = read_u32(&mut r).map_err(|_| bad("truncated row"))? as usize;
            for _ in 0..len {
                r.read_exact(&mut pair).map_err(|_| bad("truncated row"))?;
                let e = u32::from_le_bytes(pair[..4].try_into().unwrap());
                if e as usize >= n || pair[4] as u32 >= cap {
                    return Err(bad("row entry out of range"));
                }
                entities.push(e);
                distances.push(pair[4]);
            }
            offsets.push(entities.len());
        }
        Ok((
            DistanceIndex {
                cap: cap as u8,
                offsets,
                entities,
                distances,
            },
            hash,
        ))
    }
}

fn bfs_row(
    neighbors: &[Vec<EntityId>],
    src: EntityId,
    cap: u8,
    dist: &mut [u8],
    queue: &mut VecDeque<EntityId>,
    touched: &mut Vec<EntityId>,
) -> Vec<(EntityId, u8)> {
    dist[src as usize] = 0;
    touched.push(src);
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        if du + 1 >= cap {
            continue;
        }
        for &v in &neighbors[u as usize] {
            if dist[v as usize] == u8::MAX {
                dist[v as usize] = du + 1;
                touched.push(v);
                queue.push_back(v);
            }
        }
    }
    let mut row: Vec<(EntityId, u8)> = touched.iter().map(|&e| (e, dist[e as usize])).collect();
    row.sort_unstable();
    for &e in touched.iter() {
        dist[e as usize] = u8::MAX;
    }
    touched.clear();
    row
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
