//! Per-question input vectors: title ⊕ body, optionally ⊕ top-tag node
//! vector.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{QuestionId, QuestionRecord};
use crate::embed::{EmbeddingStore, FieldVectors, QuestionEncoder};
use crate::error::{Error, Result};
use crate::taggraph::{top_tag, TagGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum FeatureMode {
    #[default]
    #[serde(rename = "text")]
    Text,
    #[serde(rename = "text+network")]
    TextNetwork,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Text => "text",
            FeatureMode::TextNetwork => "text+network",
        }
    }

    pub fn uses_network(self) -> bool {
        matches!(self, FeatureMode::TextNetwork)
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(FeatureMode::Text),
            "text+network" | "text-network" | "network" => Ok(FeatureMode::TextNetwork),
            other => Err(Error::Config(format!(
                "unknown feature mode {other:?} (expected text or text+network)"
            ))),
        }
    }
}

/// Tag node vectors plus the graph used to pick each question's top tag.
#[derive(Clone, Copy)]
pub struct TagFeatures<'a> {
    pub vectors: &'a EmbeddingStore,
    pub graph: &'a TagGraph,
}

impl TagFeatures<'_> {
    /// Top-tag vector, or zeros when the tag has no vector.
    pub fn vector_for(&self, record: &QuestionRecord) -> Vec<f64> {
        self.vectors
            .get(top_tag(record, self.graph))
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.vectors.dimension()])
    }
}

#[derive(Debug, Clone)]
pub struct QuestionFeatures {
    mode: FeatureMode,
    title_dim: usize,
    body_dim: usize,
    tag_dim: usize,
    rows: HashMap<QuestionId, Vec<f64>>,
}

impl QuestionFeatures {
    pub fn build<'r, I>(
        records: I,
        encoder: &dyn QuestionEncoder,
        tags: Option<TagFeatures<'_>>,
        mode: FeatureMode,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = &'r QuestionRecord>,
    {
        let tag_dim = match (mode, &tags) {
            (FeatureMode::Text, _) => 0,
            (FeatureMode::TextNetwork, Some(t)) => t.vectors.dimension(),
            (FeatureMode::TextNetwork, None) => {
                return Err(Error::Config(
                    "text+network features need tag vectors and a tag graph".into(),
                ))
            }
        };
        let mut out = Self {
            mode,
            title_dim: encoder.title_dim(),
            body_dim: encoder.body_dim(),
            tag_dim,
            rows: HashMap::new(),
        };
        let records: Vec<&QuestionRecord> = records.into_iter().collect();
        let rows: Vec<(QuestionId, Vec<f64>)> = records
            .par_iter()
            .map(|r| {
                let fields = encoder.encode(r)?;
                let tag = match (mode, &tags) {
                    (FeatureMode::TextNetwork, Some(t)) => Some(t.vector_for(r)),
                    _ => None,
                };
                Ok((r.id, out.assemble(&fields, tag.as_deref())?))
            })
            .collect::<Result<_>>()?;
        out.rows = rows.into_iter().collect();
        Ok(out)
    }

    fn assemble(&self, fields: &FieldVectors, tag: Option<&[f64]>) -> Result<Vec<f64>> {
        let check = |expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::Dimension { expected, actual })
            }
        };
        check(self.title_dim, fields.title.len())?;
        check(self.body_dim, fields.body.len())?;
        let mut row = Vec::with_capacity(self.input_dim());
        row.extend_from_slice(&fields.title);
        row.extend_from_slice(&fields.body);
        if self.tag_dim > 0 {
            let tag = tag.ok_or_else(|| Error::Config("missing tag vector".into()))?;
            check(self.tag_dim, tag.len())?;
            row.extend_from_slice(tag);
        }
        Ok(row)
    }

    /// Add or replace one question, e.g. an unseen query.
    pub fn insert(&mut self, id: QuestionId, fields: &FieldVectors, tag: Option<&[f64]>) -> Result<()> {
        let row = self.assemble(fields, tag)?;
        self.rows.insert(id, row);
        Ok(())
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn input_dim(&self) -> usize {
        self.title_dim + self.body_dim + self.tag_dim
    }

    pub fn base_dim(&self) -> usize {
        self.title_dim + self.body_dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, id: QuestionId) -> bool {
        self.rows.contains_key(&id)
    }

    /// Full head input for the active mode.
    pub fn input(&self, id: QuestionId) -> Option<&[f64]> {
        self.rows.get(&id).map(Vec::as_slice)
    }

    /// Encoder title ⊕ body, without network features.
    pub fn base(&self, id: QuestionId) -> Option<&[f64]> {
        self.rows.get(&id).map(|r| &r[..self.base_dim()])
    }

    pub fn title(&self, id: QuestionId) -> Option<&[f64]> {
        self.rows.get(&id).map(|r| &r[..self.title_dim])
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}
