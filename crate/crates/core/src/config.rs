//! Run configuration: a flat key-value file with typed accessors.
//!
//! Format: one `key = value` per line, `#` comments and blank lines
//! ignored. Unknown keys are rejected so typos fail loudly. Every value
//! has a default; commands override single keys from flags.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::ConfigError;
use crate::eval::{CandidateMode, GridConfig, RelevanceRule, SplitSpec};
use crate::factor::Hyperparams;
use crate::num::Real;
use crate::profile::{NormMethod, NormalizationSpec, ProfileSelector};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub events: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub similarity: Option<PathBuf>,
    pub stop_words: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,

    pub d: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub zero_sample_per_item: usize,
    pub exact_sim_pairs: bool,

    pub test_fraction: f64,
    pub split_seed: u64,
    /// Defaults to the rating-scale midpoint when unset.
    pub relevance_threshold: Option<f64>,
    pub k: usize,
    pub candidates: CandidateMode,
    pub clamp: bool,

    pub norm_method: NormMethod,
    pub rating_min: f64,
    pub rating_max: f64,

    pub sim_top_k: usize,
    pub sim_threshold: f64,
    pub sim_diagonal: bool,

    pub selector: ProfileSelector,
    pub selectors: Vec<ProfileSelector>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            events: None,
            posts: None,
            weights: None,
            ratings: None,
            similarity: None,
            stop_words: None,
            output_dir: None,
            d: 16,
            lambda: 0.05,
            alpha: 0.1,
            learning_rate: 0.005,
            epochs: 200,
            seed: 42,
            init_scale: 0.1,
            zero_sample_per_item: 10,
            exact_sim_pairs: false,
            test_fraction: 0.2,
            split_seed: 7,
            relevance_threshold: None,
            k: 10,
            candidates: CandidateMode::Test,
            clamp: true,
            norm_method: NormMethod::Log1pThenMinMax,
            rating_min: 0.0,
            rating_max: 5.0,
            sim_top_k: 50,
            sim_threshold: 0.01,
            sim_diagonal: true,
            selector: ProfileSelector::AllInteraction,
            selectors: ProfileSelector::ALL.to_vec(),
        }
    }
}

fn bad_value(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(bad_value(key, format!("expected a boolean, got `{other}`"))),
    }
}

impl RunConfig {
    /// Loads defaults overridden by the file's keys.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = RunConfig::default();
        for (idx, line) in raw.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Parse {
                path: path.display().to_string(),
                line: idx as u64 + 1,
                message: format!("expected `key = value`, got `{trimmed}`"),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Sets one key from its string form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        macro_rules! parse {
            ($ty:ty) => {
                value
                    .parse::<$ty>()
                    .map_err(|e| bad_value(key, e.to_string()))?
            };
        }
        match key {
            "events" => self.events = Some(PathBuf::from(value)),
            "posts" => self.posts = Some(PathBuf::from(value)),
            "weights" => self.weights = Some(PathBuf::from(value)),
            "ratings" => self.ratings = Some(PathBuf::from(value)),
            "similarity" => self.similarity = Some(PathBuf::from(value)),
            "stop_words" => self.stop_words = Some(PathBuf::from(value)),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "d" => self.d = parse!(usize),
            "lambda" => self.lambda = parse!(f64),
            "alpha" => self.alpha = parse!(f64),
            "learning_rate" => self.learning_rate = parse!(f64),
            "epochs" => self.epochs = parse!(usize),
            "seed" => self.seed = parse!(u64),
            "init_scale" => self.init_scale = parse!(f64),
            "zero_sample_per_item" => self.zero_sample_per_item = parse!(usize),
            "exact_sim_pairs" => self.exact_sim_pairs = parse_bool(key, value)?,
            "test_fraction" => self.test_fraction = parse!(f64),
            "split_seed" => self.split_seed = parse!(u64),
            "relevance_threshold" => self.relevance_threshold = Some(parse!(f64)),
            "k" => self.k = parse!(usize),
            "candidates" => {
                self.candidates = value.parse().map_err(|e: String| bad_value(key, e))?
            }
            "clamp" => self.clamp = parse_bool(key, value)?,
            "norm_method" => {
                self.norm_method = value.parse().map_err(|e: String| bad_value(key, e))?
            }
            "rating_min" => self.rating_min = parse!(f64),
            "rating_max" => self.rating_max = parse!(f64),
            "sim_top_k" => self.sim_top_k = parse!(usize),
            "sim_threshold" => self.sim_threshold = parse!(f64),
            "sim_diagonal" => self.sim_diagonal = parse_bool(key, value)?,
            "selector" => {
                self.selector = value.parse().map_err(|e: String| bad_value(key, e))?
            }
            "selectors" => {
                let mut parsed = Vec::new();
                for token in value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                    parsed.push(token.parse().map_err(|e: String| bad_value(key, e))?);
                }
                if parsed.is_empty() {
                    return Err(bad_value(key, "no selectors listed"));
                }
                self.selectors = parsed;
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn hyperparams<S: Real>(&self) -> Hyperparams<S> {
        Hyperparams {
            d: self.d,
            lambda: S::from_config(self.lambda),
            alpha: S::from_config(self.alpha),
            learning_rate: S::from_config(self.learning_rate),
            epochs: self.epochs,
            seed: self.seed,
            init_scale: S::from_config(self.init_scale),
            zero_sample_per_item: self.zero_sample_per_item,
            exact_sim_pairs: self.exact_sim_pairs,
        }
    }

    pub fn norm_spec<S: Real>(&self) -> NormalizationSpec<S> {
        NormalizationSpec {
            method: self.norm_method,
            rating_min: S::from_config(self.rating_min),
            rating_max: S::from_config(self.rating_max),
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.test_fraction,
            seed: self.split_seed,
        }
    }

    /// Relevance rule, defaulting to the scale midpoint; an explicit
    /// threshold must sit inside the rating bounds.
    pub fn relevance_rule<S: Real>(&self) -> Result<RelevanceRule<S>, ConfigError> {
        match self.relevance_threshold {
            None => Ok(RelevanceRule::midpoint(&self.norm_spec())),
            Some(threshold) => {
                if threshold < self.rating_min || threshold > self.rating_max {
                    return Err(bad_value(
                        "relevance_threshold",
                        format!(
                            "{threshold} outside rating bounds [{}, {}]",
                            self.rating_min, self.rating_max
                        ),
                    ));
                }
                Ok(RelevanceRule {
                    threshold: S::from_config(threshold),
                })
            }
        }
    }

    pub fn grid_config<S: Real>(
        &self,
        stop_words: Option<BTreeSet<String>>,
    ) -> Result<GridConfig<S>, ConfigError> {
        Ok(GridConfig {
            hp: self.hyperparams(),
            split: self.split_spec(),
            rule: self.relevance_rule()?,
            norm: self.norm_spec(),
            sim_top_k: self.sim_top_k,
            sim_threshold: self.sim_threshold,
            sim_diagonal: self.sim_diagonal,
            k: self.k,
            selectors: self.selectors.clone(),
            candidates: self.candidates,
            clamp: self.clamp,
            stop_words,
        })
    }

    /// Resolved key-value view, embedded in output artifacts.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        if let Some(p) = &self.events {
            put("events", p.display().to_string());
        }
        if let Some(p) = &self.posts {
            put("posts", p.display().to_string());
        }
        if let Some(p) = &self.weights {
            put("weights", p.display().to_string());
        }
        if let Some(p) = &self.ratings {
            put("ratings", p.display().to_string());
        }
        if let Some(p) = &self.similarity {
            put("similarity", p.display().to_string());
        }
        if let Some(p) = &self.stop_words {
            put("stop_words", p.display().to_string());
        }
        if let Some(p) = &self.output_dir {
            put("output_dir", p.display().to_string());
        }
        put("d", self.d.to_string());
        put("lambda", self.lambda.to_string());
        put("alpha", self.alpha.to_string());
        put("learning_rate", self.learning_rate.to_string());
        put("epochs", self.epochs.to_string());
        put("seed", self.seed.to_string());
        put("init_scale", self.init_scale.to_string());
        put("zero_sample_per_item", self.zero_sample_per_item.to_string());
        put("exact_sim_pairs", self.exact_sim_pairs.to_string());
        put("test_fraction", self.test_fraction.to_string());
        put("split_seed", self.split_seed.to_string());
        put(
            "relevance_threshold",
            match self.relevance_threshold {
                Some(t) => t.to_string(),
                None => format!("{}", (self.rating_min + self.rating_max) / 2.0),
            },
        );
        put("k", self.k.to_string());
        put("candidates", self.candidates.to_string());
        put("clamp", self.clamp.to_string());
        put("norm_method", self.norm_method.to_string());
        put("rating_min", self.rating_min.to_string());
        put("rating_max", self.rating_max.to_string());
        put("sim_top_k", self.sim_top_k.to_string());
        put("sim_threshold", self.sim_threshold.to_string());
        put("sim_diagonal", self.sim_diagonal.to_string());
        put("selector", self.selector.to_string());
        put(
            "selectors",
            self.selectors
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        map
    }
}

/// Reads a stop-word file: one word per line, `#` comments skipped.
pub fn read_stop_words(path: impl AsRef<Path>) -> Result<BTreeSet<String>, ConfigError> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect())
}
