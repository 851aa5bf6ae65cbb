//! Question-field encoders.

use super::store::EmbeddingStore;
use crate::corpus::{QuestionId, QuestionRecord};
use crate::error::{Error, Result};

/// Mean of the in-vocabulary token vectors; the zero vector when none are
/// known.
pub fn encode_field<S: AsRef<str>>(tokens: &[S], store: &EmbeddingStore) -> Vec<f64> {
    let mut sum = vec![0.0; store.dimension()];
    let mut n = 0usize;
    for t in tokens {
        if let Some(v) = store.get(t.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        sum.iter_mut().for_each(|s| *s *= inv);
    }
    sum
}

pub fn title_key(id: QuestionId) -> String {
    format!("{id}#title")
}

pub fn body_key(id: QuestionId) -> String {
    format!("{id}#body")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldVectors {
    pub title: Vec<f64>,
    pub body: Vec<f64>,
}

/// Produces fixed-size title and body vectors for a question.
pub trait QuestionEncoder: Sync {
    fn title_dim(&self) -> usize;
    fn body_dim(&self) -> usize;
    fn encode(&self, record: &QuestionRecord) -> Result<FieldVectors>;
}

/// Mean-pooled token vectors (word2vec trained on the corpus).
#[derive(Debug, Clone)]
pub struct MeanPoolEncoder {
    tokens: EmbeddingStore,
}

impl MeanPoolEncoder {
    pub fn new(tokens: EmbeddingStore) -> Self {
        Self { tokens }
    }

    pub fn tokens(&self) -> &EmbeddingStore {
        &self.tokens
    }
}

impl QuestionEncoder for MeanPoolEncoder {
    fn title_dim(&self) -> usize {
        self.tokens.dimension()
    }

    fn body_dim(&self) -> usize {
        self.tokens.dimension()
    }

    fn encode(&self, record: &QuestionRecord) -> Result<FieldVectors> {
        Ok(FieldVectors {
            title: encode_field(&record.title_tokens, &self.tokens),
            body: encode_field(&record.body_tokens, &self.tokens),
        })
    }
}

/// Vectors computed elsewhere (e.g. by a sentence transformer), keyed
/// `<id>#title` and `<id>#body`.
#[derive(Debug, Clone)]
pub struct PrecomputedEncoder {
    fields: EmbeddingStore,
}

impl PrecomputedEncoder {
    pub fn new(fields: EmbeddingStore) -> Self {
        Self { fields }
    }
}

impl QuestionEncoder for PrecomputedEncoder {
    fn title_dim(&self) -> usize {
        self.fields.dimension()
    }

    fn body_dim(&self) -> usize {
        self.fields.dimension()
    }

    fn encode(&self, record: &QuestionRecord) -> Result<FieldVectors> {
        let fetch = |key: String| {
            self.fields
                .get(&key)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::InvalidInput(format!("no precomputed vector for {key}")))
        };
        Ok(FieldVectors {
            title: fetch(title_key(record.id))?,
            body: fetch(body_key(record.id))?,
        })
    }
}
