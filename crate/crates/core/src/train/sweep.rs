//! Grid expansion and the reference-count sweep.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::train::config::{default_grid, is_known_key, normalize_key, Paradigm, TrainConfig};
use crate::train::trainer::{Trainer, TrainingData};
use crate::vlp::ReferenceTable;

/// A parsed grid: each key with its candidate values.
pub type Grid = Vec<(String, Vec<String>)>;

/// Parses `key = v1,v2,...` lines (`#` comments allowed). The single value
/// `default` expands to [`default_grid`] for that key. Unknown keys and
/// empty value lists are reported together, before anything runs.
pub fn parse_grid(text: &str) -> Result<Grid> {
    let mut grid = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(format!("line {}: expected 'key = v1,v2,...'", i + 1));
            continue;
        };
        let key = normalize_key(k);
        if !is_known_key(&key) {
            errors.push(format!("line {}: unknown configuration key '{key}'", i + 1));
            continue;
        }
        if v.trim() == "default" {
            match default_grid(&key) {
                Some(values) => grid.push((key, values.into_iter().map(String::from).collect())),
                None => errors.push(format!("line {}: no default grid for '{key}'", i + 1)),
            }
            continue;
        }
        let values: Vec<String> = v
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if values.is_empty() {
            errors.push(format!("line {}: no values for '{key}'", i + 1));
            continue;
        }
        grid.push((key, values));
    }
    if errors.is_empty() {
        Ok(grid)
    } else {
        Err(Error::InvalidConfig(errors))
    }
}

/// Cartesian product of the grid, first key varying slowest.
pub fn expand_grid(grid: &Grid) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in grid {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    out
}

/// Applies one grid point to a base config and validates the result.
pub fn apply_point(base: &TrainConfig, point: &[(String, String)]) -> Result<TrainConfig> {
    let mut c = base.clone();
    let errors: Vec<String> = point
        .iter()
        .filter_map(|(k, v)| c.set(k, v).err())
        .collect();
    if !errors.is_empty() {
        return Err(Error::InvalidConfig(errors));
    }
    c.validate()?;
    Ok(c)
}

/// Trains one reference-model run per `N` with an otherwise identical
/// config and returns the final validation MRR of each.
pub fn reference_sweep(
    base: &TrainConfig,
    data: &TrainingData,
    n_values: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if n_values.is_empty() {
        return Err(Error::InvalidConfig(vec![
            "reference sweep needs at least one N".into(),
        ]));
    }
    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let config = TrainConfig {
            refs: n,
            mode: Paradigm::Vlp,
            ..base.clone()
        };
        let refs = ReferenceTable::select(&data.kg, &data.dist, n);
        let run_data = TrainingData {
            refs: Some(Arc::new(refs)),
            ..data.clone()
        };
        let mut trainer = Trainer::new(config, run_data)?;
        let summary = trainer.run(None)?;
        out.push((n, summary.final_valid_mrr));
    }
    Ok(out)
}
