//! Trains the same model with and without reference aggregation on the
//! generated compositional graph and prints test MRR per distance bucket.
//!
//! Usage: cargo run --release -p vlp-core --example compositional [model] [steps]

use std::env;

use vlp_core::data::synthetic::{compositional_kg, CompositionalSpec};
use vlp_core::eval::{evaluate, ScoreMode, Scorer};
use vlp_core::train::{Paradigm, TrainConfig, Trainer, TrainingData};

fn main() -> vlp_core::Result<()> {
    let args: Vec<String> = env::args().collect();
    let mut base = TrainConfig {
        dim: 32,
        batch: 64,
        lr: 0.01,
        steps: 1500,
        gamma: 4.0,
        lambda: 0.5,
        refs: 4,
        ..TrainConfig::default()
    };
    base.sampler.negatives = 16;
    if let Some(m) = args.get(1) {
        base.set("model", m)
            .map_err(|e| vlp_core::Error::InvalidConfig(vec![e]))?;
    }
    if let Some(s) = args.get(2) {
        base.set("steps", s)
            .map_err(|e| vlp_core::Error::InvalidConfig(vec![e]))?;
    }
    for kv in args.iter().skip(3) {
        if let Some((k, v)) = kv.split_once('=') {
            base.set(k, v)
                .map_err(|e| vlp_core::Error::InvalidConfig(vec![e]))?;
        }
    }
    let kg = compositional_kg(&CompositionalSpec::default()).augment_reciprocal()?;
    let data = TrainingData::build(kg, base.cap as u8, Some(base.refs));
    let only = env::var("ONLY").ok();
    for mode in [Paradigm::Hlp, Paradigm::Vlp] {
        if only.as_deref().is_some_and(|o| o != mode.to_string()) {
            continue;
        }
        let config = TrainConfig {
            mode,
            ..base.clone()
        };
        let started = std::time::Instant::now();
        let mut trainer = Trainer::new(config, data.clone())?;
        let summary = trainer.run(None)?;
        if env::var_os("SHOW_LOG").is_some() {
            for line in &summary.log {
                println!("  {}", line.to_tsv());
            }
        }
        let refs = (mode == Paradigm::Vlp)
            .then_some(data.refs.as_deref())
            .flatten();
        let scorer = Scorer::new(trainer.store(), refs, base.lambda, ScoreMode::Combined)?;
        let report = evaluate(&data.kg, &data.dist, &data.filter, &scorer, data.kg.test());
        let tail: Vec<f64> = report
            .ranks
            .iter()
            .filter(|r| !r.head_direction)
            .map(|r| r.rank)
            .collect();
        let tail = vlp_core::eval::Metrics::from_ranks(tail);
        println!(
            "{mode}: valid {:.4} test {:.4} (tail {:.4}) buckets {:?} in {:.1}s",
            summary.final_valid_mrr,
            report.overall.mrr,
            tail.mrr,
            report
                .distance
                .iter()
                .map(|(b, m)| format!("{b}:{:.3}/{}", m.mrr, m.count))
                .collect::<Vec<_>>(),
            started.elapsed().as_secs_f64()
        );
        if let Some(refs) = refs {
            for score in [ScoreMode::FgOnly, ScoreMode::FcOnly] {
                let scorer = Scorer::new(trainer.store(), Some(refs), base.lambda, score)?;
                let r = evaluate(&data.kg, &data.dist, &data.filter, &scorer, data.kg.test());
                println!("  {score}: test {:.4}", r.overall.mrr);
            }
        }
    }
    Ok(())
}
