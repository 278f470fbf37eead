//! Training configuration: flat `key = value` files with flag overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ModelKind, Norm};
use crate::sampling::{PostWeightScore, SamplerConfig, SamplerMode};

/// Whether the vertical score and its cross-entropy term are trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Paradigm {
    Hlp,
    Vlp,
}

impl Paradigm {
    pub fn name(self) -> &'static str {
        match self {
            Paradigm::Hlp => "hlp",
            Paradigm::Vlp => "vlp",
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Paradigm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hlp" => Ok(Paradigm::Hlp),
            "vlp" => Ok(Paradigm::Vlp),
            _ => Err(format!("unknown mode '{s}' (expected hlp or vlp)")),
        }
    }
}

/// Every recognised key, in the order the effective config is echoed.
pub const CONFIG_KEYS: &[&str] = &[
    "dataset",
    "out",
    "model",
    "mode",
    "sampler",
    "norm",
    "dim",
    "hidden",
    "batch",
    "lr",
    "steps",
    "gamma",
    "lambda",
    "alpha",
    "alpha0",
    "alpha1",
    "alpha2",
    "tau",
    "negs",
    "refs",
    "cap",
    "seed",
    "threads",
    "eval-every",
    "valid-limit",
    "postweight-score",
    "no-pre",
    "no-post",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: ModelKind,
    pub mode: Paradigm,
    pub norm: Norm,
    pub dim: usize,
    /// Aggregator hidden width; 0 selects the realified embedding width.
    pub hidden: usize,
    pub batch: usize,
    pub lr: f64,
    pub steps: u64,
    pub gamma: f64,
    pub lambda: f64,
    /// Weight of the sampling loss in `L1 + α·L2`.
    pub alpha: f64,
    pub sampler: SamplerConfig,
    pub refs: usize,
    pub cap: u32,
    pub seed: u64,
    /// 0 lets the thread pool pick.
    pub threads: usize,
    /// Validation interval in steps; 0 validates only after the last step.
    pub eval_every: u64,
    /// Caps the number of validation triples scored during training; 0 means all.
    pub valid_limit: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dataset: None,
            out: None,
            model: ModelKind::RotatE,
            mode: Paradigm::Vlp,
            norm: Norm::L2,
            dim: 100,
            hidden: 0,
            batch: 512,
            lr: 1e-3,
            steps: 1000,
            gamma: 6.0,
            lambda: 0.5,
            alpha: 0.5,
            sampler: SamplerConfig::default(),
            refs: 8,
            cap: 8,
            seed: 0,
            threads: 0,
            eval_every: 0,
            valid_limit: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("{key}: cannot parse '{value}': {e}"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("{key}: expected a boolean, got '{value}'")),
    }
}

/// Canonical form of a key: lower case with `-` separators.
pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

pub fn is_known_key(key: &str) -> bool {
    CONFIG_KEYS.contains(&normalize_key(key).as_str())
}

impl TrainConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = normalize_key(key);
        let value = value.trim();
        let k = key.as_str();
        match k {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "model" => self.model = parse(k, value)?,
            "mode" => self.mode = parse(k, value)?,
            "sampler" => self.sampler.mode = parse::<SamplerMode>(k, value)?,
            "norm" => self.norm = parse(k, value)?,
            "dim" => self.dim = parse(k, value)?,
            "hidden" => self.hidden = parse(k, value)?,
            "batch" => self.batch = parse(k, value)?,
            "lr" => self.lr = parse(k, value)?,
            "steps" => self.steps = parse(k, value)?,
            "gamma" => self.gamma = parse(k, value)?,
            "lambda" => self.lambda = parse(k, value)?,
            "alpha" => self.alpha = parse(k, value)?,
            "alpha0" => self.sampler.alpha0 = parse(k, value)?,
            "alpha1" => self.sampler.alpha1 = parse(k, value)?,
            "alpha2" => self.sampler.alpha2 = parse(k, value)?,
            "tau" => self.sampler.tau = parse(k, value)?,
            "negs" => self.sampler.negatives = parse(k, value)?,
            "refs" | "n" => self.refs = parse(k, value)?,
            "cap" => self.cap = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "threads" => self.threads = parse(k, value)?,
            "eval-every" => self.eval_every = parse(k, value)?,
            "valid-limit" => self.valid_limit = parse(k, value)?,
            "postweight-score" => self.sampler.score = parse::<PostWeightScore>(k, value)?,
            "no-pre" => self.sampler.no_pre = parse_bool(k, value)?,
            "no-post" => self.sampler.no_post = parse_bool(k, value)?,
            _ => return Err(format!("unknown configuration key '{key}'")),
        }
        Ok(())
    }

    /// Applies a config file body on top of `self`. Every bad line is
    /// reported, not only the first.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = self.set(k, v) {
                        errors.push(format!("line {}: {e}", i + 1));
                    }
                }
                None => errors.push(format!("line {}: expected 'key = value'", i + 1)),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = TrainConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// The textual value of a key, as accepted back by [`Self::set`].
    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or(String::new(), |p| p.display().to_string())
        };
        Some(match normalize_key(key).as_str() {
            "dataset" => path(&self.dataset),
            "out" => path(&self.out),
            "model" => self.model.name().to_string(),
            "mode" => self.mode.name().to_string(),
            "sampler" => self.sampler.mode.name().to_string(),
            "norm" => self.norm.name().to_string(),
            "dim" => self.dim.to_string(),
            "hidden" => self.hidden.to_string(),
            "batch" => self.batch.to_string(),
            "lr" => self.lr.to_string(),
            "steps" => self.steps.to_string(),
            "gamma" => self.gamma.to_string(),
            "lambda" => self.lambda.to_string(),
            "alpha" => self.alpha.to_string(),
            "alpha0" => self.sampler.alpha0.to_string(),
            "alpha1" => self.sampler.alpha1.to_string(),
            "alpha2" => self.sampler.alpha2.to_string(),
            "tau" => self.sampler.tau.to_string(),
            "negs" => self.sampler.negatives.to_string(),
            "refs" | "n" => self.refs.to_string(),
            "cap" => self.cap.to_string(),
            "seed" => self.seed.to_string(),
            "threads" => self.threads.to_string(),
            "eval-every" => self.eval_every.to_string(),
            "valid-limit" => self.valid_limit.to_string(),
            "postweight-score" => self.sampler.score.name().to_string(),
            "no-pre" => self.sampler.no_pre.to_string(),
            "no-post" => self.sampler.no_post.to_string(),
            _ => return None,
        })
    }

    /// `(key, value)` for every key, in [`CONFIG_KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        CONFIG_KEYS
            .iter()
            .map(|&k| (k, self.get(k).unwrap_or_default()))
            .collect()
    }

    /// Checks every constraint and reports all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                v.push(msg.to_string());
            }
        };
        let s = &self.sampler;
        check(self.dim >= 1, "dim must be at least 1");
        check(self.batch >= 1, "batch must be at least 1");
        check(
            self.lr.is_finite() && self.lr >= 0.0,
            "lr must be finite and non-negative",
        );
        check(
            self.gamma.is_finite() && self.gamma > 0.0,
            "gamma must be positive",
        );
        check(
            self.lambda.is_finite() && self.lambda >= 0.0,
            "lambda must be non-negative",
        );
        check(
            self.alpha.is_finite() && self.alpha >= 0.0,
            "alpha must be non-negative",
        );
        check(
            s.alpha0.is_finite() && s.alpha0 > 0.0,
            "alpha0 must be positive",
        );
        check(
            s.alpha1.is_finite() && s.alpha1 > 0.0,
            "alpha1 must be positive",
        );
        check(
            s.alpha2.is_finite() && s.alpha2 > 0.0,
            "alpha2 must be positive",
        );
        check(
            s.tau.is_finite() && s.tau >= 0.0,
            "tau must be non-negative",
        );
        check(s.negatives >= 1, "negs must be at least 1");
        check(self.refs < u8::MAX as usize, "refs must be below 255");
        check(
            (1..=u8::MAX as u32).contains(&self.cap),
            "cap must be in 1..=255",
        );
        check(
            self.norm == Norm::L2 || self.model == ModelKind::TransE,
            "norm l1 is only available for transe",
        );
        check(
            s.mode == SamplerMode::ReD || !(s.no_pre || s.no_post),
            "no-pre and no-post only apply to the red sampler",
        );
        check(
            !(s.no_pre && s.no_post),
            "no-pre and no-post are mutually exclusive",
        );
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Realified aggregator width actually used.
    pub fn hidden_width(&self) -> usize {
        if self.hidden == 0 {
            self.model.entity_width(self.dim)
        } else {
            self.hidden
        }
    }
}

/// Default value lists for grid search, following the published search
/// space. The loss weight `alpha` reuses the temperature range.
pub fn default_grid(key: &str) -> Option<Vec<&'static str>> {
    let temps = vec!["0.1", "0.5", "1.0", "1.5"];
    Some(match normalize_key(key).as_str() {
        "batch" => vec!["256", "512", "1024"],
        "dim" => vec!["500", "1000"],
        "alpha0" | "alpha1" | "alpha2" | "alpha" => temps,
        "lambda" => vec!["0.1", "0.3", "0.5", "0.7", "0.9"],
        "gamma" => vec!["4", "6", "8", "11", "15"],
        "refs" | "n" => vec!["0", "2", "4", "6", "8", "10"],
        _ => return None,
    })
}
