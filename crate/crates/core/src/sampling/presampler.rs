//! Pre-sampling of negative tails.
//!
//! The distance sampler draws `t'` with probability proportional to
//! `exp(-α0 · d_g(h, t'))`. Entities sharing a distance are exchangeable, so
//! a draw picks a distance bucket with weight `|bucket| · exp(-α0 · d)` and
//! then an entity uniformly inside it. Buckets below the cap come from the
//! sparse distance row; the cap bucket is everything else and is indexed
//! without materializing it.

use std::sync::Arc;

use rand::Rng;

use crate::data::distance::DistanceIndex;
use crate::data::graph::EntityId;

#[derive(Debug, Clone)]
pub enum PreSampler {
    Uniform { num_entities: usize },
    Distance(DistanceSampler),
}

#[derive(Debug, Clone)]
pub struct DistanceSampler {
    dist: Arc<DistanceIndex>,
    alpha0: f64,
    /// Explicit row entities of every source ordered by (distance, id).
    ordered: Vec<EntityId>,
    row_offsets: Vec<usize>,
    /// Per source: `cap + 1` bucket start offsets into `ordered`, relative.
    bucket_starts: Vec<u32>,
    /// Per source: `cap + 1` cumulative normalized bucket weights.
    cumulative: Vec<f64>,
}

impl PreSampler {
    pub fn uniform(num_entities: usize) -> Self {
        PreSampler::Uniform { num_entities }
    }

    pub fn distance(dist: Arc<DistanceIndex>, alpha0: f64) -> Self {
        assert!(alpha0 > 0.0, "pre-sampling temperature must be positive");
        let n = dist.num_entities();
        let cap = dist.cap() as usize;
        let mut ordered = Vec::with_capacity(dist.stored_pairs());
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let mut bucket_starts = Vec::with_capacity(n * (cap + 1));
        let mut cumulative = Vec::with_capacity(n * (cap + 1));
        let mut sizes = vec![0usize; cap + 1];
        for src in 0..n as EntityId {
            let levels = dist.row_by_distance(src);
            sizes.fill(0);
            for &(d, e) in &levels {
                sizes[d as usize] += 1;
                ordered.push(e);
            }
            row_offsets.push(ordered.len());
            sizes[cap] = n - levels.len();
            let mut start = 0u32;
            for s in &sizes {
                bucket_starts.push(start);
                start += *s as u32;
            }
            let weights: Vec<f64> = sizes
                .iter()
                .enumerate()
                .map(|(d, &s)| s as f64 * (-alpha0 * d as f64).exp())
                .collect();
            let z: f64 = weights.iter().sum();
            let mut acc = 0.0;
            for w in weights {
                acc += w / z;
                cumulative.push(acc);
            }
        }
        PreSampler::Distance(DistanceSampler {
            dist,
            alpha0,
            ordered,
            row_offsets,
            bucket_starts,
            cumulative,
        })
    }

    pub fn num_entities(&self) -> usize {
        match self {
            PreSampler::Uniform { num_entities } => *num_entities,
            PreSampler::Distance(s) => s.dist.num_entities(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, head: EntityId, rng: &mut R) -> EntityId {
        match self {
            PreSampler::Uniform { num_entities } => rng.random_range(0..*num_entities as EntityId),
            PreSampler::Distance(s) => s.sample(head, rng),
        }
    }

    /// `l` independent draws with replacement. The gold tail is not excluded.
    pub fn sample_negatives<R: Rng + ?Sized>(
        &self,
        head: EntityId,
        l: usize,
        rng: &mut R,
    ) -> Vec<EntityId> {
        (0..l).map(|_| self.sample(head, rng)).collect()
    }

    /// Normalized bucket weights for `head`, indexed by distance `0..=cap`.
    /// `None` for the uniform sampler.
    pub fn bucket_weights(&self, head: EntityId) -> Option<Vec<f64>> {
        match self {
            PreSampler::Uniform { .. } => None,
            PreSampler::Distance(s) => {
                let c = s.cumulative_row(head);
                Some(
                    c.iter()
                        .scan(0.0, |prev, &x| {
                            let w = x - *prev;
                            *prev = x;
                            Some(w)
                        })
                        .collect(),
                )
            }
        }
    }
}

impl DistanceSampler {
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    fn stride(&self) -> usize {
        self.dist.cap() as usize + 1
    }

    fn cumulative_row(&self, head: EntityId) -> &[f64] {
        let k = self.stride();
        &self.cumulative[head as usize * k..(head as usize + 1) * k]
    }

    fn sample<R: Rng + ?Sized>(&self, head: EntityId, rng: &mut R) -> EntityId {
        let k = self.stride();
        let cap = k - 1;
        let cum = self.cumulative_row(head);
        let u: f64 = rng.random::<f64>() * cum[cap];
        let mut bucket = cap;
        for (d, &c) in cum.iter().enumerate() {
            if u < c {
                bucket = d;
                break;
            }
        }
        let (row_ids, _) = self.dist.row(head);
        let starts = &self.bucket_starts[head as usize * k..(head as usize + 1) * k];
        if bucket < cap {
            let (start, end) = (starts[bucket], starts[bucket + 1]);
            // Empty buckets have zero weight and are only reachable through
            // rounding at the end of the cumulative table.
            if end > start {
                let j = rng.random_range(start..end) as usize;
                return self.ordered[self.row_offsets[head as usize] + j];
            }
        }
        let missing = self.dist.num_entities() - row_ids.len();
        if missing == 0 {
            let j = rng.random_range(0..row_ids.len());
            return row_ids[j];
        }
        let j = rng.random_range(0..missing);
        nth_absent(row_ids, j)
    }
}

/// The `j`-th (0-based) id in `0..` that is absent from the sorted `present`.
fn nth_absent(present: &[EntityId], j: usize) -> EntityId {
    // present[i] - i counts absent ids below present[i].
    let mut lo = 0usize;
    let mut hi = present.len();
    while lo < hi {
        let mid = (lo + hi) / 2;
        if (present[mid] as usize - mid) <= j {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (j + lo) as EntityId
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::graph::{KnowledgeGraph, Triple, Vocabulary};
    use crate::rng::derived_rng;

    #[test]
    fn nth_absent_skips_present_ids() {
        let present = [1, 2, 5];
        let absent: Vec<u32> = (0..4).map(|j| nth_absent(&present, j)).collect();
        assert_eq!(absent, [0, 3, 4, 6]);
        assert_eq!(nth_absent(&[], 3), 3);
    }

    #[test]
    fn chain_bucket_weights() {
        let kg = KnowledgeGraph::from_triples(
            Vocabulary::synthetic(3, 1),
            vec![Triple::new(0, 0, 1), Triple::new(1, 0, 2)],
            vec![],
            vec![],
        );
        let dist = Arc::new(DistanceIndex::compute(&kg, 8));
        let s = PreSampler::distance(dist, 1.0);
        let w = s.bucket_weights(0).unwrap();
        let z = 1.0 + (-1.0f64).exp() + (-2.0f64).exp();
        assert!((w[0] - 1.0 / z).abs() < 1e-12);
        assert!((w[1] - (-1.0f64).exp() / z).abs() < 1e-12);
        assert!((w[2] - (-2.0f64).exp() / z).abs() < 1e-12);
        assert!(w[3..].iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn single_entity_always_draws_itself() {
        let kg = KnowledgeGraph::from_triples(
            Vocabulary::synthetic(1, 1),
            vec![Triple::new(0, 0, 0)],
            vec![],
            vec![],
        );
        let s = PreSampler::distance(Arc::new(DistanceIndex::compute(&kg, 8)), 1.0);
        let mut rng = derived_rng(1, 2, 3);
        assert!(s.sample_negatives(0, 50, &mut rng).iter().all(|&e| e == 0));
    }

    #[test]
    fn reproducible_with_fixed_seed() {
        let kg = KnowledgeGraph::from_triples(
            Vocabulary::synthetic(6, 1),
            vec![
                Triple::new(0, 0, 1),
                Triple::new(1, 0, 2),
                Triple::new(3, 0, 4),
            ],
            vec![],
            vec![],
        );
        let s = PreSampler::distance(Arc::new(DistanceIndex::compute(&kg, 8)), 0.5);
        let a = s.sample_negatives(1, 100, &mut derived_rng(4, 0, 0));
        let b = s.sample_negatives(1, 100, &mut derived_rng(4, 0, 0));
        assert_eq!(a, b);
        assert!(a.iter().all(|&e| (e as usize) < 6));
    }
}
