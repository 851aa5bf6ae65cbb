//! Artifact layout under the work directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use dupq_core::features::FeatureMode;

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

/// File-name form of a feature mode.
pub fn mode_slug(mode: FeatureMode) -> &'static str {
    match mode {
        FeatureMode::Text => "text",
        FeatureMode::TextNetwork => "text-network",
    }
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn file(&self, dir: &str, name: &str) -> PathBuf {
        self.root.join(dir).join(name)
    }

    pub fn questions(&self) -> PathBuf {
        self.file("corpus", "questions.jsonl")
    }

    pub fn pairs(&self) -> PathBuf {
        self.file("corpus", "pairs.jsonl")
    }

    pub fn corpus_stats(&self) -> PathBuf {
        self.file("corpus", "stats.json")
    }

    pub fn edges(&self) -> PathBuf {
        self.file("graph", "edges.tsv")
    }

    pub fn tag_counts(&self) -> PathBuf {
        self.file("graph", "tag_counts.tsv")
    }

    pub fn token_vectors(&self) -> PathBuf {
        self.file("embeddings", "tokens.vec")
    }

    pub fn tag_vectors(&self) -> PathBuf {
        self.file("embeddings", "tags.vec")
    }

    pub fn candidates(&self, split: &str) -> PathBuf {
        self.file("candidates", &format!("{split}.jsonl"))
    }

    pub fn candidate_summary(&self) -> PathBuf {
        self.file("candidates", "summary.json")
    }

    pub fn head(&self, mode: FeatureMode) -> PathBuf {
        self.file("retrieval", &format!("head-{}.ckpt", mode_slug(mode)))
    }

    pub fn head_report(&self, mode: FeatureMode) -> PathBuf {
        self.file("retrieval", &format!("train-{}.json", mode_slug(mode)))
    }

    /// `label` is `head-<mode>` or `bm25`.
    pub fn ranked(&self, label: &str, split: &str) -> PathBuf {
        self.file("retrieval", &format!("ranked-{label}-{split}.tsv"))
    }

    pub fn report(&self, name: &str, ext: &str) -> PathBuf {
        self.file("reports", &format!("{name}.{ext}"))
    }

    pub fn time_model(&self, model: &str, mode: FeatureMode) -> PathBuf {
        self.file("timepred", &format!("{model}-{}.ckpt", mode_slug(mode)))
    }

    pub fn time_train_report(&self, model: &str, mode: FeatureMode) -> PathBuf {
        self.file("timepred", &format!("train-{model}-{}.json", mode_slug(mode)))
    }

    pub fn time_ranked(&self, model: &str, mode: FeatureMode) -> PathBuf {
        self.file("timepred", &format!("ranked-{model}-{}.tsv", mode_slug(mode)))
    }

    pub fn log_config(&self, command: &str) -> PathBuf {
        self.file("logs", &format!("{command}.config.json"))
    }

    /// Create the parent directory of an output path.
    pub fn prepare(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(())
    }
}

/// Fail with the name of the command that produces a missing artifact.
pub fn require(path: &Path, producer: &str) -> Result<()> {
    if !path.exists() {
        bail!("missing {}; run `dupq {producer}` first", path.display());
    }
    Ok(())
}
