use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use vlp_core::cache::{cache_dir, load_or_build_distances, load_or_build_references, CacheEvent};
use vlp_core::data::{load_dataset, KnowledgeGraph};
use vlp_core::eval::{evaluate, format_table, parse_report, ScoreMode, Scorer};
use vlp_core::model::ModelKind;
use vlp_core::train::{
    apply_point, expand_grid, parse_grid, Checkpoint, Paradigm, TrainConfig, Trainer, TrainingData,
};

use crate::{
    ConfigFlags, EvalArgs, EvalSplit, PreprocessArgs, ReportArgs, SweepArgs, TableView, TrainArgs,
};

/// Name of the effective configuration written next to every checkpoint.
pub const CONFIG_FILE: &str = "config.txt";
pub const REPORT_FILE: &str = "report.tsv";
pub const RANKS_FILE: &str = "ranks.tsv";
pub const SUMMARY_FILE: &str = "summary.tsv";

fn init_threads(threads: usize) {
    if threads == 0 {
        return;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        warn!("could not size the thread pool: {e}");
    }
}

/// Defaults, then the `--config` file, then explicit flags.
fn resolve_config(flags: &ConfigFlags) -> Result<TrainConfig> {
    let mut config = TrainConfig::default();
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        config
            .apply_text(&text)
            .with_context(|| format!("in config file {}", path.display()))?;
    }
    let mut errors: Vec<String> = flags
        .pairs()
        .into_iter()
        .filter_map(|(k, v)| config.set(k, &v).err())
        .collect();
    // Range checks on whatever did parse, so one run lists every problem.
    if let Err(vlp_core::Error::InvalidConfig(more)) = config.validate() {
        errors.extend(more);
    }
    if !errors.is_empty() {
        return Err(vlp_core::Error::InvalidConfig(errors).into());
    }
    Ok(config)
}

fn config_text(config: &TrainConfig) -> String {
    let mut s = String::new();
    for (k, v) in config.entries() {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

fn echo_config(config: &TrainConfig) {
    info!("effective configuration:");
    for (k, v) in config.entries() {
        info!("  {k} = {v}");
    }
}

fn load_graph(dataset: &Path) -> Result<KnowledgeGraph> {
    let kg = load_dataset(dataset)?.augment_reciprocal()?;
    if !kg.warnings().is_empty() {
        warn!(
            "{} entities or relations of valid/test never occur in train (first: {})",
            kg.warnings().len(),
            kg.warnings()[0]
        );
    }
    info!(
        "dataset {}: {} entities, {} relations (with reciprocals), {} train triples, hash {:016x}",
        dataset.display(),
        kg.num_entities(),
        kg.num_relations(),
        kg.train().len(),
        kg.dataset_hash()
    );
    Ok(kg)
}

/// Distance index plus, when `refs` is given, the reference table, both
/// through the cache directory of `dataset`.
fn build_data(
    kg: Arc<KnowledgeGraph>,
    dataset: &Path,
    cap: u8,
    refs: Option<usize>,
    auto: bool,
) -> Result<TrainingData> {
    let dir = cache_dir(dataset);
    let (dist, event) = load_or_build_distances(&kg, &dir, cap, auto)?;
    log_cache(&event);
    let table = match refs {
        Some(n) => {
            let (table, event) = load_or_build_references(&kg, &dist, &dir, n, auto)?;
            log_cache(&event);
            Some(Arc::new(table))
        }
        None => None,
    };
    Ok(TrainingData::new(kg, Arc::new(dist), table))
}

fn log_cache(event: &CacheEvent) {
    info!("{event}");
}

fn needs_refs(config: &TrainConfig) -> Option<usize> {
    (config.mode == Paradigm::Vlp).then_some(config.refs)
}

pub fn preprocess(a: PreprocessArgs) -> Result<()> {
    init_threads(a.threads.unwrap_or(0));
    info!(
        "preprocess: dataset = {}, cap = {}, refs = {}, alpha0 = {}",
        a.dataset.display(),
        a.cap,
        a.refs,
        a.alpha0
    );
    if a.cap == 0 {
        bail!("cap must be at least 1");
    }
    let kg = Arc::new(load_graph(&a.dataset)?);
    let data = build_data(kg, &a.dataset, a.cap, Some(a.refs), true)?;
    println!(
        "distance rows {} ({} stored pairs), reference keys {}",
        data.dist.num_entities(),
        data.dist.stored_pairs(),
        data.refs.as_ref().map_or(0, |r| r.len())
    );
    Ok(())
}

/// Trains one configuration into its `out` directory.
fn train_one(
    config: &TrainConfig,
    kg: Arc<KnowledgeGraph>,
    auto: bool,
    resume: bool,
) -> Result<vlp_core::train::TrainSummary> {
    let dataset = config.dataset.clone().context("--dataset is required")?;
    let out = config.out.clone().context("--out is required")?;
    let data = build_data(kg, &dataset, config.cap as u8, needs_refs(config), auto)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join(CONFIG_FILE), config_text(config))
        .with_context(|| format!("writing {}", out.join(CONFIG_FILE).display()))?;
    let mut trainer = if resume {
        let path = out.join(vlp_core::train::trainer::LAST_CHECKPOINT);
        let ckpt = Checkpoint::load(&path)?;
        info!("resuming from {} at step {}", path.display(), ckpt.step());
        Trainer::resume(config.clone(), data, ckpt)?
    } else {
        Trainer::new(config.clone(), data)?
    };
    Ok(trainer.run(Some(&out))?)
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut config = resolve_config(&a.flags)?;
    if config.out.is_none() {
        config.out = Some(PathBuf::from("out"));
    }
    init_threads(config.threads);
    echo_config(&config);
    let dataset = config.dataset.clone().context("--dataset is required")?;
    let kg = Arc::new(load_graph(&dataset)?);
    let summary = train_one(&config, kg, !a.no_auto, a.resume)?;
    println!(
        "step {}: final valid MRR {:.6}, best {:.6} at step {}",
        summary.steps, summary.final_valid_mrr, summary.best_valid_mrr, summary.best_step
    );
    if let Some(p) = &summary.last_checkpoint {
        println!("checkpoint {}", p.display());
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    init_threads(a.threads.unwrap_or(0));
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let run_dir = a
        .checkpoint
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let saved_path = run_dir.join(CONFIG_FILE);
    let saved = if saved_path.exists() {
        let text = fs::read_to_string(&saved_path)?;
        TrainConfig::from_text(&text).with_context(|| format!("in {}", saved_path.display()))?
    } else {
        TrainConfig::default()
    };
    let kind = ckpt.store.kind();
    if let Some(m) = &a.model {
        let wanted: ModelKind = m.parse().map_err(anyhow::Error::msg)?;
        if wanted != kind {
            bail!(
                "checkpoint holds a {} model, not {}",
                kind.name(),
                wanted.name()
            );
        }
    }
    let dataset = a
        .dataset
        .clone()
        .or_else(|| saved.dataset.clone())
        .context("--dataset is required (no config.txt next to the checkpoint)")?;
    let mode: ScoreMode = a.mode.parse().map_err(anyhow::Error::msg)?;
    let lambda = a.lambda.unwrap_or(saved.lambda);
    let n = a.refs.unwrap_or(saved.refs);
    let cap = a.cap.unwrap_or(saved.cap as u8);
    if cap == 0 {
        bail!("cap must be at least 1");
    }
    let out = a.out.clone().unwrap_or_else(|| run_dir.clone());

    info!("effective configuration:");
    info!(
        "  checkpoint = {} (step {})",
        a.checkpoint.display(),
        ckpt.step()
    );
    info!("  model = {} dim {}", kind.name(), ckpt.store.dim());
    info!("  dataset = {}", dataset.display());
    info!(
        "  mode = {mode}, on = {:?}, lambda = {lambda}, refs = {n}, cap = {cap}",
        a.on
    );

    let kg = load_graph(&dataset)?;
    if ckpt.dataset_hash != kg.dataset_hash() {
        return Err(vlp_core::Error::VocabularyMismatch {
            checkpoint: ckpt.dataset_hash,
            dataset: kg.dataset_hash(),
        }
        .into());
    }
    if ckpt.store.num_entities() != kg.num_entities()
        || ckpt.store.num_relations() != kg.num_relations()
    {
        bail!(
            "checkpoint shape {}x{} does not match the dataset {}x{}",
            ckpt.store.num_entities(),
            ckpt.store.num_relations(),
            kg.num_entities(),
            kg.num_relations()
        );
    }
    let vertical = ckpt.store.aggregator().is_some() && mode != ScoreMode::FgOnly;
    let data = build_data(
        Arc::new(kg),
        &dataset,
        cap,
        vertical.then_some(n),
        !a.no_auto,
    )?;
    let scorer = Scorer::new(&ckpt.store, data.refs.as_deref(), lambda, mode)?;
    if scorer.effective_mode() != mode {
        info!(
            "model has no aggregator; scoring with {}",
            scorer.effective_mode()
        );
    }
    let triples = match a.on {
        EvalSplit::Test => data.kg.test(),
        EvalSplit::Valid => data.kg.valid(),
    };
    let report = evaluate(&data.kg, &data.dist, &data.filter, &scorer, triples);

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let report_name = match a.on {
        EvalSplit::Test => REPORT_FILE.to_string(),
        EvalSplit::Valid => format!("valid-{REPORT_FILE}"),
    };
    let report_path = out.join(report_name);
    fs::write(&report_path, report.to_tsv())
        .with_context(|| format!("writing {}", report_path.display()))?;
    info!("wrote {}", report_path.display());
    if a.dump_ranks {
        let path = out.join(RANKS_FILE);
        fs::write(&path, report.ranks_tsv(&data.kg))
            .with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
    }
    let sections: &[&str] = match a.split {
        TableView::All => &[],
        TableView::Overall => &["overall"],
        TableView::Distance => &["distance"],
        TableView::Relation => &["relation"],
        TableView::Rmp => &["rmp-head", "rmp-tail"],
    };
    print!("{}", format_table(&report.cells(), sections));
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    let text =
        fs::read_to_string(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
    let cells = parse_report(&text)?;
    let sections: Vec<&str> = a.sections.iter().map(String::as_str).collect();
    print!("{}", format_table(&cells, &sections));
    Ok(())
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let grid_text = fs::read_to_string(&a.grid)
        .with_context(|| format!("reading grid {}", a.grid.display()))?;
    let grid = parse_grid(&grid_text).with_context(|| format!("in grid {}", a.grid.display()))?;
    let base = resolve_config(&a.flags)?;
    let points = expand_grid(&grid);
    let mut configs = Vec::with_capacity(points.len());
    let mut errors = Vec::new();
    for point in &points {
        match apply_point(&base, point) {
            Ok(c) => configs.push(c),
            Err(e) => errors.push(format!("{point:?}: {e}")),
        }
    }
    if !errors.is_empty() {
        bail!("invalid grid points:\n  {}", errors.join("\n  "));
    }
    init_threads(base.threads);
    let root = base.out.clone().unwrap_or_else(|| PathBuf::from("sweep"));
    let dataset = base.dataset.clone().context("--dataset is required")?;
    let kg = Arc::new(load_graph(&dataset)?);
    fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;

    let keys: Vec<&str> = grid.iter().map(|(k, _)| k.as_str()).collect();
    let mut summary = format!(
        "run\t{}\tvalid_mrr\tbest_valid_mrr\tbest_step\n",
        keys.join("\t")
    );
    let summary_path = root.join(SUMMARY_FILE);
    info!("sweep of {} runs into {}", configs.len(), root.display());
    for (i, (mut config, point)) in configs.into_iter().zip(&points).enumerate() {
        let name = format!("run-{i:03}");
        config.out = Some(root.join(&name));
        info!("{name}: {point:?}");
        echo_config(&config);
        let s = train_one(&config, kg.clone(), !a.no_auto, false)?;
        let values: Vec<&str> = point.iter().map(|(_, v)| v.as_str()).collect();
        let _ = writeln!(
            summary,
            "{name}\t{}\t{:.6}\t{:.6}\t{}",
            values.join("\t"),
            s.final_valid_mrr,
            s.best_valid_mrr,
            s.best_step
        );
        fs::write(&summary_path, &summary)
            .with_context(|| format!("writing {}", summary_path.display()))?;
    }
    print!("{summary}");
    Ok(())
}
