//! Filtered ranking and report aggregation against brute-force oracles.

mod common;

use common::sort_oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vlp_core::data::graph::Vocabulary;
use vlp_core::data::synthetic::{compositional_kg, CompositionalSpec};
use vlp_core::data::{DistanceIndex, FilterIndex, KnowledgeGraph, Triple};
use vlp_core::eval::{evaluate, filtered_rank, unfiltered_rank, Metrics, ScoreMode, Scorer};
use vlp_core::model::{ModelKind, ParameterStore};

fn random_kg(seed: u64, entities: usize, relations: usize) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triple = || {
        Triple::new(
            rng.random_range(0..entities as u32),
            rng.random_range(0..relations as u32),
            rng.random_range(0..entities as u32),
        )
    };
    let train = (0..60).map(|_| triple()).collect();
    let valid = (0..10).map(|_| triple()).collect();
    let test = (0..25).map(|_| triple()).collect();
    KnowledgeGraph::from_triples(
        Vocabulary::synthetic(entities, relations),
        train,
        valid,
        test,
    )
    .augment_reciprocal()
    .unwrap()
}

/// A DistMult store with every parameter in {-1, 0, 1}: integer scores, so
/// ties are frequent and exact.
fn tie_heavy_store(kg: &KnowledgeGraph, seed: u64) -> ParameterStore<f64> {
    let mut store = ParameterStore::<f64>::init(
        ModelKind::DistMult,
        3,
        kg.num_entities(),
        kg.num_relations(),
        4.0,
        seed,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in store.parameters_mut() {
        *p = rng.random_range(-1..=1) as f64;
    }
    store
}

#[test]
fn filtered_metrics_match_an_exhaustive_sort_on_20_entities() {
    for seed in 0..10 {
        let kg = random_kg(seed, 20, 3);
        let dist = DistanceIndex::compute(&kg, 8);
        let filter = FilterIndex::new(&kg);
        let store = tie_heavy_store(&kg, seed);
        let scorer = Scorer::new(&store, None, 0.5, ScoreMode::FgOnly).unwrap();
        let report = evaluate(&kg, &dist, &filter, &scorer, kg.test());

        let mut oracle = Vec::new();
        for t in kg.test() {
            let scores: Vec<f64> = (0..20)
                .map(|c| store.score_fg(t.head, t.relation, c))
                .collect();
            oracle.push(sort_oracle(
                &scores,
                t.tail,
                filter.known_tails(t.head, t.relation),
            ));
        }
        let got: Vec<f64> = report.ranks.iter().map(|r| r.rank).collect();
        assert_eq!(got, oracle, "seed {seed}");
        assert!(
            got.iter().any(|r| r.fract() != 0.0),
            "seed {seed} produced no ties"
        );

        let n = oracle.len() as f64;
        let mrr = oracle.iter().map(|r| 1.0 / r).sum::<f64>() / n;
        let hits = |k: f64| oracle.iter().filter(|&&r| r <= k).count() as f64 / n;
        let m = report.overall;
        assert_eq!(m.mrr, mrr);
        assert_eq!(
            (m.hits1, m.hits3, m.hits10),
            (hits(1.0), hits(3.0), hits(10.0))
        );
    }
}

#[test]
fn report_cells_partition_the_test_set() {
    let kg = compositional_kg(&CompositionalSpec::default())
        .augment_reciprocal()
        .unwrap();
    let dist = DistanceIndex::compute(&kg, 8);
    let filter = FilterIndex::new(&kg);
    let store = ParameterStore::<f64>::init(
        ModelKind::RotatE,
        4,
        kg.num_entities(),
        kg.num_relations(),
        6.0,
        3,
    );
    let scorer = Scorer::new(&store, None, 0.5, ScoreMode::FgOnly).unwrap();
    let report = evaluate(&kg, &dist, &filter, &scorer, kg.test());
    let total = kg.test().len();
    assert_eq!(report.overall.count, total);
    assert_eq!(
        report.distance.iter().map(|(_, m)| m.count).sum::<usize>(),
        total
    );
    assert_eq!(
        report.relation.iter().map(|(_, m)| m.count).sum::<usize>(),
        total
    );
    let rmp: usize = report
        .rmp_head
        .iter()
        .chain(&report.rmp_tail)
        .map(|(_, m)| m.count)
        .sum();
    assert_eq!(rmp, total);
    let head = report.ranks.iter().filter(|r| r.head_direction).count();
    assert_eq!(head * 2, total);
    for r in &report.ranks {
        assert!(r.rank >= 1.0 && r.rank <= kg.num_entities() as f64);
    }
}

/// With exchangeable random scores the gold is uniform over the `k` kept
/// candidates, so `E[1/rank] = H_k / k`.
#[test]
fn untrained_model_scores_near_the_random_baseline() {
    let kg = compositional_kg(&CompositionalSpec::default())
        .augment_reciprocal()
        .unwrap();
    let dist = DistanceIndex::compute(&kg, 8);
    let filter = FilterIndex::new(&kg);
    let store = ParameterStore::<f64>::init(
        ModelKind::DistMult,
        16,
        kg.num_entities(),
        kg.num_relations(),
        6.0,
        11,
    );
    let scorer = Scorer::new(&store, None, 0.5, ScoreMode::FgOnly).unwrap();
    let report = evaluate(&kg, &dist, &filter, &scorer, kg.test());

    let (mut mean, mut var) = (0.0, 0.0);
    for t in kg.test() {
        let known = filter.known_tails(t.head, t.relation);
        let k = kg.num_entities() - known.len() + 1;
        let h1: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
        let h2: f64 = (1..=k).map(|i| 1.0 / (i * i) as f64).sum();
        let e = h1 / k as f64;
        mean += e;
        var += h2 / k as f64 - e * e;
    }
    let n = kg.test().len() as f64;
    let (mean, sigma) = (mean / n, var.sqrt() / n);
    let got = report.overall.mrr;
    assert!(
        (got - mean).abs() <= 3.0 * sigma,
        "MRR {got} vs baseline {mean} ± {sigma}"
    );
}

proptest! {
    #[test]
    fn filtering_never_worsens_the_rank(
        scores in prop::collection::vec(-5i32..5, 2..30),
        gold_pick in any::<prop::sample::Index>(),
        known_mask in prop::collection::vec(any::<bool>(), 30),
    ) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let gold = gold_pick.index(scores.len()) as u32;
        let known: Vec<u32> = (0..scores.len() as u32).filter(|&e| known_mask[e as usize]).collect();
        let f = filtered_rank(&scores, gold, &known);
        prop_assert!(f <= unfiltered_rank(&scores, gold));
        prop_assert_eq!(f, sort_oracle(&scores, gold, &known));
    }

    #[test]
    fn metrics_ignore_monotone_score_transforms(
        queries in prop::collection::vec((prop::collection::vec(-20i32..20, 2..25), any::<prop::sample::Index>()), 1..10),
    ) {
        let transform = |x: f64| 2.0 * x * x * x + 5.0;
        let mut plain = Vec::new();
        let mut mapped = Vec::new();
        for (scores, pick) in &queries {
            let s: Vec<f64> = scores.iter().map(|&x| f64::from(x)).collect();
            let gold = pick.index(s.len()) as u32;
            plain.push(unfiltered_rank(&s, gold));
            let m: Vec<f64> = s.iter().map(|&x| transform(x)).collect();
            mapped.push(unfiltered_rank(&m, gold));
        }
        prop_assert_eq!(Metrics::from_ranks(plain), Metrics::from_ranks(mapped));
    }
}
