//! The training loop.
//!
//! The batch and the sampling stream of step `s` depend only on `(seed, s)`:
//! batches are consecutive windows over a concatenation of seeded per-epoch
//! permutations, and each step draws its negatives from its own derived
//! stream. Resuming from a checkpoint at step `k` therefore reproduces an
//! uninterrupted run exactly.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;

use crate::data::{DistanceIndex, FilterIndex, KnowledgeGraph, Triple};
use crate::error::{Error, Result};
use crate::eval::{evaluate, ScoreMode, Scorer};
use crate::model::{Gradients, ParameterStore};
use crate::rng::{derived_rng, PURPOSE_SHUFFLE, PURPOSE_STEP};
use crate::sampling::PreSampler;
use crate::train::adam::AdamState;
use crate::train::checkpoint::Checkpoint;
use crate::train::config::{Paradigm, TrainConfig};
use crate::train::loss::{example_loss_and_grad, prepare_example, ExampleLoss, LossConfig};
use crate::vlp::ReferenceTable;

/// Immutable inputs shared by training and evaluation.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub kg: Arc<KnowledgeGraph>,
    pub dist: Arc<DistanceIndex>,
    pub refs: Option<Arc<ReferenceTable>>,
    pub filter: Arc<FilterIndex>,
}

impl TrainingData {
    pub fn new(
        kg: Arc<KnowledgeGraph>,
        dist: Arc<DistanceIndex>,
        refs: Option<Arc<ReferenceTable>>,
    ) -> Self {
        let filter = Arc::new(FilterIndex::new(&kg));
        TrainingData {
            kg,
            dist,
            refs,
            filter,
        }
    }

    /// Computes distances (and references when `refs` is given) from a
    /// reciprocal-augmented graph.
    pub fn build(kg: KnowledgeGraph, cap: u8, refs: Option<usize>) -> Self {
        let dist = Arc::new(DistanceIndex::compute(&kg, cap));
        let refs = refs.map(|n| Arc::new(ReferenceTable::select(&kg, &dist, n)));
        Self::new(Arc::new(kg), dist, refs)
    }
}

/// Mean losses of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub step: u64,
    pub l1: f64,
    pub l2: f64,
    pub loss: f64,
}

/// One validation point of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLine {
    pub step: u64,
    pub l1: f64,
    pub l2: f64,
    pub loss: f64,
    pub valid_mrr: f64,
    pub seconds: f64,
}

impl LogLine {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.3}",
            self.step, self.l1, self.l2, self.loss, self.valid_mrr, self.seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub steps: u64,
    pub final_valid_mrr: f64,
    pub best_valid_mrr: f64,
    pub best_step: u64,
    pub log: Vec<LogLine>,
    pub last_checkpoint: Option<PathBuf>,
    pub best_checkpoint: Option<PathBuf>,
}

pub const LAST_CHECKPOINT: &str = "last.vlpc";
pub const BEST_CHECKPOINT: &str = "best.vlpc";
pub const TRAIN_LOG: &str = "train.log";

pub struct Trainer {
    config: TrainConfig,
    data: TrainingData,
    sampler: PreSampler,
    loss: LossConfig,
    store: ParameterStore<f32>,
    adam: AdamState<f32>,
    grads: Gradients,
    order: Option<(u64, Vec<u32>)>,
}

impl Trainer {
    /// Fresh parameters initialized from the config seed.
    pub fn new(config: TrainConfig, data: TrainingData) -> Result<Self> {
        config.validate()?;
        let kg = &data.kg;
        let mut store = ParameterStore::<f32>::init(
            config.model,
            config.dim,
            kg.num_entities(),
            kg.num_relations(),
            config.gamma,
            config.seed,
        )
        .with_norm(config.norm);
        if config.mode == Paradigm::Vlp {
            store = store.with_aggregator(config.hidden_width(), config.seed);
        }
        let adam = AdamState::new(&store);
        Self::assemble(config, data, store, adam)
    }

    /// Continues from a checkpoint; its shapes and dataset must match.
    pub fn resume(config: TrainConfig, data: TrainingData, ckpt: Checkpoint) -> Result<Self> {
        config.validate()?;
        if ckpt.dataset_hash != data.kg.dataset_hash() {
            return Err(Error::VocabularyMismatch {
                checkpoint: ckpt.dataset_hash,
                dataset: data.kg.dataset_hash(),
            });
        }
        let s = &ckpt.store;
        let mut problems = Vec::new();
        if s.kind() != config.model {
            problems.push(format!(
                "checkpoint model is {}, config asks for {}",
                s.kind(),
                config.model
            ));
        }
        if s.dim() != config.dim {
            problems.push(format!(
                "checkpoint dim is {}, config asks for {}",
                s.dim(),
                config.dim
            ));
        }
        let wants_agg = config.mode == Paradigm::Vlp;
        match (s.aggregator(), wants_agg) {
            (Some(a), true) if a.hidden() != config.hidden_width() => problems.push(format!(
                "checkpoint hidden width is {}, config asks for {}",
                a.hidden(),
                config.hidden_width()
            )),
            (None, true) => problems.push("checkpoint has no aggregator but mode is vlp".into()),
            (Some(_), false) => {
                problems.push("checkpoint has an aggregator but mode is hlp".into())
            }
            _ => {}
        }
        if s.norm() != config.norm {
            problems.push("checkpoint norm differs from config".into());
        }
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        Self::assemble(config, data, ckpt.store, ckpt.adam)
    }

    fn assemble(
        config: TrainConfig,
        data: TrainingData,
        store: ParameterStore<f32>,
        adam: AdamState<f32>,
    ) -> Result<Self> {
        if config.mode == Paradigm::Vlp && data.refs.is_none() {
            return Err(Error::InvalidConfig(vec![
                "mode vlp needs a reference table".into(),
            ]));
        }
        if store.num_entities() != data.kg.num_entities()
            || store.num_relations() != data.kg.num_relations()
        {
            return Err(Error::InvalidConfig(vec![format!(
                "parameter tables cover {} entities and {} relations, dataset has {} and {}",
                store.num_entities(),
                store.num_relations(),
                data.kg.num_entities(),
                data.kg.num_relations()
            )]));
        }
        if data.kg.train().is_empty() {
            return Err(Error::InvalidConfig(vec!["training split is empty".into()]));
        }
        let sampler = if config.sampler.uses_distance_presampling() {
            PreSampler::distance(data.dist.clone(), config.sampler.alpha0)
        } else {
            PreSampler::uniform(data.kg.num_entities())
        };
        let loss = LossConfig {
            paradigm: config.mode,
            lambda: config.lambda,
            gamma: config.gamma,
        };
        let grads = store.new_gradients();
        Ok(Trainer {
            config,
            data,
            sampler,
            loss,
            store,
            adam,
            grads,
            order: None,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn data(&self) -> &TrainingData {
        &self.data
    }

    pub fn store(&self) -> &ParameterStore<f32> {
        &self.store
    }

    /// Number of optimizer steps applied so far.
    pub fn step(&self) -> u64 {
        self.adam.step()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            store: self.store.clone(),
            adam: self.adam.clone(),
            dataset_hash: self.data.kg.dataset_hash(),
        }
    }

    fn epoch_order(&mut self, epoch: u64) -> &[u32] {
        if self.order.as_ref().is_none_or(|(e, _)| *e != epoch) {
            let n = self.data.kg.train().len() as u32;
            let mut perm: Vec<u32> = (0..n).collect();
            perm.shuffle(&mut derived_rng(self.config.seed, PURPOSE_SHUFFLE, epoch));
            self.order = Some((epoch, perm));
        }
        &self.order.as_ref().expect("just filled").1
    }

    /// The training triples of step `step`.
    pub fn batch_for_step(&mut self, step: u64) -> Vec<Triple> {
        let n = self.data.kg.train().len() as u64;
        let b = self.config.batch as u64;
        (step * b..(step + 1) * b)
            .map(|p| {
                let idx = self.epoch_order(p / n)[(p % n) as usize];
                self.data.kg.train()[idx as usize]
            })
            .collect()
    }

    /// One optimizer step on the batch of the current step counter.
    pub fn train_step(&mut self) -> Result<StepStats> {
        let step = self.adam.step();
        let batch = self.batch_for_step(step);
        let mut rng = derived_rng(self.config.seed, PURPOSE_STEP, step);
        let b = batch.len() as f64;
        let vlp = self.config.mode == Paradigm::Vlp;
        let (l1_scale, l2_scale) = if vlp {
            (1.0 / b, self.config.alpha / b)
        } else {
            (0.0, 1.0 / b)
        };
        let weighting = self.config.sampler.post_weighting();
        self.grads.clear();
        let mut sum = ExampleLoss::default();
        for &t in &batch {
            let refs = match (&self.data.refs, vlp) {
                (Some(table), true) => table.references(t.head, t.relation, Some(t.tail)),
                _ => Vec::new(),
            };
            let ex = prepare_example(
                &self.store,
                &self.loss,
                t,
                refs,
                &self.sampler,
                weighting,
                self.config.sampler.score,
                self.config.sampler.negatives,
                &mut rng,
            );
            let l = example_loss_and_grad(
                &self.store,
                &self.loss,
                &ex,
                l1_scale,
                l2_scale,
                &mut self.grads,
            );
            sum.l1 += l.l1;
            sum.l2 += l.l2;
        }
        let l1 = sum.l1 / b;
        let l2 = sum.l2 / b;
        let loss = if vlp { l1 + self.config.alpha * l2 } else { l2 };
        if !loss.is_finite() || !l1.is_finite() || !l2.is_finite() {
            let v = self.data.kg.vocab();
            let shown: Vec<String> = batch
                .iter()
                .take(8)
                .map(|t| {
                    format!(
                        "({}, {}, {})",
                        v.entity_name(t.head),
                        v.relation_name(t.relation),
                        v.entity_name(t.tail)
                    )
                })
                .collect();
            let more = if batch.len() > 8 {
                format!(" and {} more", batch.len() - 8)
            } else {
                String::new()
            };
            return Err(Error::NonFiniteLoss {
                step,
                l1,
                l2,
                batch: format!("[{}]{more}", shown.join(", ")),
            });
        }
        self.adam
            .apply(&mut self.store, &self.grads, self.config.lr);
        Ok(StepStats {
            step: step + 1,
            l1,
            l2,
            loss,
        })
    }

    /// Filtered MRR on (a deterministic subset of) the validation split,
    /// scored with the combined score.
    pub fn validation_mrr(&self) -> Result<f64> {
        let valid = self.data.kg.valid();
        if valid.is_empty() {
            return Ok(0.0);
        }
        let limit = self.config.valid_limit;
        let subset: Vec<Triple> = if limit == 0 || limit >= valid.len() {
            valid.to_vec()
        } else {
            valid
                .iter()
                .step_by(valid.len() / limit)
                .take(limit)
                .copied()
                .collect()
        };
        let refs = if self.store.aggregator().is_some() {
            self.data.refs.as_deref()
        } else {
            None
        };
        let scorer = Scorer::new(&self.store, refs, self.config.lambda, ScoreMode::Combined)?;
        let report = evaluate(
            &self.data.kg,
            &self.data.dist,
            &self.data.filter,
            &scorer,
            &subset,
        );
        Ok(report.overall.mrr)
    }

    /// Trains up to `config.steps` total steps, validating every
    /// `eval_every` steps and once at the end. With an output directory the
    /// log, the latest checkpoint and the best-by-validation checkpoint are
    /// written there.
    pub fn run(&mut self, out: Option<&Path>) -> Result<TrainSummary> {
        let started = Instant::now();
        let mut log_file = match out {
            Some(dir) => {
                fs::create_dir_all(dir)
                    .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
                let path = dir.join(TRAIN_LOG);
                let fresh = self.step() == 0 || !path.exists();
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(!fresh)
                    .write(true)
                    .truncate(fresh)
                    .open(&path)
                    .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
                if fresh {
                    writeln!(f, "step\tL1\tL2\tL\tvalid_mrr\tseconds")
                        .map_err(|e| Error::io("writing training log", e))?;
                }
                Some(f)
            }
            None => None,
        };
        let last_path = out.map(|d| d.join(LAST_CHECKPOINT));
        let best_path = out.map(|d| d.join(BEST_CHECKPOINT));

        let total = self.config.steps;
        let every = self.config.eval_every;
        let mut summary = TrainSummary {
            steps: self.step(),
            final_valid_mrr: 0.0,
            best_valid_mrr: f64::NEG_INFINITY,
            best_step: self.step(),
            log: Vec::new(),
            last_checkpoint: last_path.clone(),
            best_checkpoint: None,
        };
        let mut acc = (0.0, 0.0, 0.0, 0u64);
        loop {
            let step = self.step();
            let due = step >= total || (every > 0 && step.is_multiple_of(every) && step > 0);
            if due {
                let n = acc.3.max(1) as f64;
                let valid_mrr = self.validation_mrr()?;
                let line = LogLine {
                    step,
                    l1: acc.0 / n,
                    l2: acc.1 / n,
                    loss: acc.2 / n,
                    valid_mrr,
                    seconds: started.elapsed().as_secs_f64(),
                };
                acc = (0.0, 0.0, 0.0, 0);
                info!(
                    "step {step}: L1 {:.4} L2 {:.4} L {:.4} valid MRR {valid_mrr:.4}",
                    line.l1, line.l2, line.loss
                );
                if let Some(f) = &mut log_file {
                    writeln!(f, "{}", line.to_tsv())
                        .map_err(|e| Error::io("writing training log", e))?;
                    f.flush()
                        .map_err(|e| Error::io("writing training log", e))?;
                }
                summary.log.push(line);
                summary.final_valid_mrr = valid_mrr;
                let ckpt = (last_path.is_some() || best_path.is_some()).then(|| self.checkpoint());
                if let (Some(p), Some(c)) = (&last_path, &ckpt) {
                    c.save(p)?;
                }
                if valid_mrr > summary.best_valid_mrr {
                    summary.best_valid_mrr = valid_mrr;
                    summary.best_step = step;
                    if let (Some(p), Some(c)) = (&best_path, &ckpt) {
                        c.save(p)?;
                        summary.best_checkpoint = Some(p.clone());
                    }
                }
            }
            if step >= total {
                break;
            }
            let s = self.train_step()?;
            acc.0 += s.l1;
            acc.1 += s.l2;
            acc.2 += s.loss;
            acc.3 += 1;
        }
        summary.steps = self.step();
        Ok(summary)
    }
}
