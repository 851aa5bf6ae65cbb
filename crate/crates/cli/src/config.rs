//! Resolved pipeline configuration: defaults, then the config file, then
//! dotted command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use dupq_core::baseline::Bm25Params;
use dupq_core::corpus::SplitBoundaries;
use dupq_core::embed::{SgnsConfig, TrainingMode};
use dupq_core::features::FeatureMode;
use dupq_core::optim::OptimizerKind;
use dupq_core::retrieval::{CandidateFilter, HeadHyper, ScoreFunction};
use dupq_core::taggraph::{WalkConfig, DEFAULT_EDGE_THRESHOLD};
use dupq_core::timepred::{default_time_cutoff, MlpHyper, TreeParams, DEFAULT_GAP_FLOOR_HOURS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub feature_mode: FeatureMode,
    pub paths: PathsConfig,
    pub split: SplitBoundaries,
    pub graph: GraphConfig,
    pub node2vec: Node2vecConfig,
    pub word2vec: Word2vecConfig,
    pub retrieval: RetrievalConfig,
    pub bm25: Bm25Params,
    pub timepred: TimepredConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub posts: PathBuf,
    pub links: PathBuf,
    pub work_dir: PathBuf,
    /// Embedding store of question-field vectors keyed `<id>#title` /
    /// `<id>#body`; replaces the built-in word2vec encoder when set.
    pub precomputed_fields: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub edge_threshold: f64,
    /// Build the graph from questions posted before the end of the
    /// training window only.
    pub training_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Node2vecConfig {
    pub p: f64,
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub batch_words: Option<usize>,
    pub mode: TrainingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Word2vecConfig {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub mode: TrainingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub out_dim: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub margin: f64,
    pub norm_degree: f64,
    pub alpha: f64,
    pub optimizer: OptimizerKind,
    pub score: ScoreFunction,
    /// Candidates written per anchor in ranked output.
    pub top_k: usize,
    pub tag_jaccard_min: f64,
    pub title_cosine_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimepredConfig {
    /// Anchors posted before this train (and validate); the rest test.
    pub cutoff: DateTime<Utc>,
    pub validation_fraction: f64,
    pub gap_floor_hours: f64,
    pub hidden: Option<[usize; 2]>,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            threads: 0,
            feature_mode: FeatureMode::Text,
            paths: PathsConfig::default(),
            split: SplitBoundaries::default(),
            graph: GraphConfig::default(),
            node2vec: Node2vecConfig::default(),
            word2vec: Word2vecConfig::default(),
            retrieval: RetrievalConfig::default(),
            bm25: Bm25Params::default(),
            timepred: TimepredConfig::default(),
        }
    }
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            posts: "data/Posts.xml".into(),
            links: "data/PostLinks.xml".into(),
            work_dir: "work".into(),
            precomputed_fields: None,
        }
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
            training_only: true,
        }
    }
}

impl Default for Node2vecConfig {
    fn default() -> Self {
        let w = WalkConfig::default();
        Self {
            p: w.p,
            q: w.q,
            walks_per_node: w.walks_per_node,
            walk_length: w.walk_length,
            dimension: 64,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 3,
            batch_words: Some(5),
            mode: TrainingMode::Deterministic,
        }
    }
}

impl Default for Word2vecConfig {
    fn default() -> Self {
        Self {
            dimension: 384,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 3,
            mode: TrainingMode::Deterministic,
        }
    }
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        let h = HeadHyper::default();
        let f = CandidateFilter::default();
        Self {
            out_dim: h.out_dim,
            learning_rate: h.learning_rate,
            epsilon: h.epsilon,
            epochs: h.epochs,
            batch_size: h.batch_size,
            margin: h.margin,
            norm_degree: h.norm_degree,
            alpha: 0.5,
            optimizer: h.optimizer,
            score: h.score,
            top_k: 100,
            tag_jaccard_min: f.tag_jaccard_min,
            title_cosine_min: f.title_cosine_min,
        }
    }
}

impl Default for TimepredConfig {
    fn default() -> Self {
        let m = MlpHyper::default();
        let t = TreeParams::default();
        Self {
            cutoff: default_time_cutoff(),
            validation_fraction: 0.25,
            gap_floor_hours: DEFAULT_GAP_FLOOR_HOURS,
            hidden: m.hidden,
            learning_rate: m.learning_rate,
            epsilon: m.epsilon,
            batch_size: m.batch_size,
            epochs: m.epochs,
            optimizer: m.optimizer,
            max_depth: t.max_depth,
            min_samples_split: t.min_samples_split,
        }
    }
}

impl PipelineConfig {
    /// Defaults, deep-merged with `file` (if any), then `overrides`
    /// (`dotted.key`, raw value) applied in order.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::default())?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let user: Value =
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            merge(&mut value, user, "")?;
        }
        for (key, raw) in overrides {
            set_dotted(&mut value, key, parse_scalar(raw))?;
        }
        let cfg: Self = serde_json::from_value(value).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("graph.edge_threshold", self.graph.edge_threshold),
            ("retrieval.tag_jaccard_min", self.retrieval.tag_jaccard_min),
            ("retrieval.title_cosine_min", self.retrieval.title_cosine_min),
            ("retrieval.alpha", self.retrieval.alpha),
            ("timepred.validation_fraction", self.timepred.validation_fraction),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                bail!("{name} = {v} must lie in [0, 1]");
            }
        }
        let positive = [
            ("node2vec.dimension", self.node2vec.dimension),
            ("word2vec.dimension", self.word2vec.dimension),
            ("retrieval.out_dim", self.retrieval.out_dim),
            ("retrieval.epochs", self.retrieval.epochs),
            ("retrieval.batch_size", self.retrieval.batch_size),
            ("retrieval.top_k", self.retrieval.top_k),
            ("timepred.batch_size", self.timepred.batch_size),
            ("timepred.epochs", self.timepred.epochs),
        ];
        for (name, v) in positive {
            if v == 0 {
                bail!("{name} must be positive");
            }
        }
        if self.timepred.validation_fraction >= 1.0 {
            bail!("timepred.validation_fraction must be below 1");
        }
        self.walk_config().validate()?;
        self.word2vec_config().validate()?;
        self.node2vec_sgns().validate()?;
        self.head_hyper().validate()?;
        Ok(())
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            p: self.node2vec.p,
            q: self.node2vec.q,
            walks_per_node: self.node2vec.walks_per_node,
            walk_length: self.node2vec.walk_length,
            seed: self.seed,
        }
    }

    pub fn node2vec_sgns(&self) -> SgnsConfig {
        let n = &self.node2vec;
        SgnsConfig {
            dimension: n.dimension,
            window: n.window,
            negatives: n.negatives,
            epochs: n.epochs,
            learning_rate: n.learning_rate,
            min_count: n.min_count,
            batch_words: n.batch_words,
            seed: self.seed,
            mode: n.mode,
        }
    }

    pub fn word2vec_config(&self) -> SgnsConfig {
        let w = &self.word2vec;
        SgnsConfig {
            dimension: w.dimension,
            window: w.window,
            negatives: w.negatives,
            epochs: w.epochs,
            learning_rate: w.learning_rate,
            min_count: w.min_count,
            batch_words: None,
            seed: self.seed,
            mode: w.mode,
        }
    }

    pub fn head_hyper(&self) -> HeadHyper {
        let r = &self.retrieval;
        HeadHyper {
            out_dim: r.out_dim,
            learning_rate: r.learning_rate,
            epsilon: r.epsilon,
            epochs: r.epochs,
            batch_size: r.batch_size,
            margin: r.margin,
            norm_degree: r.norm_degree,
            optimizer: r.optimizer,
            score: r.score,
            seed: self.seed,
        }
    }

    pub fn candidate_filter(&self) -> CandidateFilter {
        CandidateFilter {
            tag_jaccard_min: self.retrieval.tag_jaccard_min,
            title_cosine_min: self.retrieval.title_cosine_min,
        }
    }

    pub fn mlp_hyper(&self) -> MlpHyper {
        let t = &self.timepred;
        MlpHyper {
            hidden: t.hidden,
            learning_rate: t.learning_rate,
            epsilon: t.epsilon,
            batch_size: t.batch_size,
            epochs: t.epochs,
            optimizer: t.optimizer,
            seed: self.seed,
        }
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.timepred.max_depth,
            min_samples_split: self.timepred.min_samples_split,
        }
    }
}

fn merge(base: &mut Value, user: Value, at: &str) -> Result<()> {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &path)?,
                    None => bail!("unknown config key `{path}`"),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

/// Numbers, booleans, `null`, arrays and objects parse as JSON; anything
/// else is a string.
pub fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

pub fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut slot = root;
    for part in key.split('.') {
        slot = match slot {
            Value::Object(map) => map
                .get_mut(part)
                .with_context(|| format!("unknown config key `{key}`"))?,
            _ => bail!("unknown config key `{key}`"),
        };
    }
    *slot = value;
    Ok(())
}

pub type Overrides = Vec<(String, String)>;

/// Split `--a.b value` / `--a.b=value` overrides out of `args`; everything
/// else is returned for the regular parser.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        if !key.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().with_context(|| format!("--{key} needs a value"))?,
        };
        overrides.push((key.replace('-', "_"), value));
    }
    Ok((rest, overrides))
}
