//! Okapi BM25 over title ⊕ body tokens.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, QuestionId, QuestionRecord};
use crate::error::{Error, Result};
use crate::ranking::{RankedEntry, RankedList};
use crate::retrieval::EvalAnchor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75 }
    }
}

#[derive(Debug, Clone, Default)]
struct DocStats {
    tf: HashMap<String, u32>,
    len: usize,
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    df: HashMap<String, u32>,
    docs: HashMap<QuestionId, DocStats>,
    total_len: usize,
}

pub fn document_tokens(record: &QuestionRecord) -> impl Iterator<Item = &str> {
    record
        .title_tokens
        .iter()
        .chain(&record.body_tokens)
        .map(String::as_str)
}

impl Bm25Index {
    /// An empty index.
    pub fn new(params: Bm25Params) -> Self {
        Self {
            params,
            df: HashMap::new(),
            docs: HashMap::new(),
            total_len: 0,
        }
    }

    pub fn index_corpus<'r>(records: impl IntoIterator<Item = &'r QuestionRecord>, params: Bm25Params) -> Self {
        let mut index = Self::new(params);
        for r in records {
            index.add(r.id, document_tokens(r));
        }
        index
    }

    /// Index (or replace) one document.
    pub fn add<'t>(&mut self, id: QuestionId, tokens: impl IntoIterator<Item = &'t str>) {
        if let Some(old) = self.docs.remove(&id) {
            self.total_len -= old.len;
            for t in old.tf.keys() {
                if let Some(d) = self.df.get_mut(t) {
                    *d -= 1;
                    if *d == 0 {
                        self.df.remove(t);
                    }
                }
            }
        }
        let mut doc = DocStats::default();
        for t in tokens {
            *doc.tf.entry(t.to_string()).or_default() += 1;
            doc.len += 1;
        }
        for t in doc.tf.keys() {
            *self.df.entry(t.clone()).or_default() += 1;
        }
        self.total_len += doc.len;
        self.docs.insert(id, doc);
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn term_freq(&self, id: QuestionId, term: &str) -> Option<u32> {
        self.docs.get(&id).map(|d| d.tf.get(term).copied().unwrap_or(0))
    }

    pub fn doc_len(&self, id: QuestionId) -> Option<usize> {
        self.docs.get(&id).map(|d| d.len)
    }

    pub fn avg_len(&self) -> f64 {
        if self.docs.is_empty() {
            0.0
        } else {
            self.total_len as f64 / self.docs.len() as f64
        }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.doc_freq(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    pub fn score<S: AsRef<str>>(&self, query: &[S], id: QuestionId) -> Result<f64> {
        let doc = self.docs.get(&id).ok_or(Error::UnknownDocument(id))?;
        let Bm25Params { k1, b } = self.params;
        let avg = self.avg_len();
        let norm = if avg > 0.0 { doc.len as f64 / avg } else { 0.0 };
        Ok(query
            .iter()
            .map(|t| {
                let t = t.as_ref();
                let tf = doc.tf.get(t).copied().unwrap_or(0) as f64;
                if tf == 0.0 {
                    return 0.0;
                }
                self.idf(t) * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm))
            })
            .sum())
    }
}

pub fn bm25_score<S: AsRef<str>>(query: &[S], id: QuestionId, index: &Bm25Index) -> Result<f64> {
    index.score(query, id)
}

/// Rank an anchor's candidates with its title ⊕ body tokens as the query.
pub fn bm25_rank(query: &[&str], anchor: &EvalAnchor, index: &Bm25Index, corpus: &Corpus) -> Result<RankedList> {
    let scored = anchor
        .set
        .candidates
        .iter()
        .map(|c| Ok(RankedEntry { id: c.id, score: index.score(query, c.id)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedList::from_scores(anchor.set.anchor, scored, corpus, &anchor.gold))
}

/// Rank every anchor; anchors must be corpus questions.
pub fn bm25_rank_all(anchors: &[EvalAnchor], index: &Bm25Index, corpus: &Corpus) -> Result<Vec<RankedList>> {
    anchors
        .par_iter()
        .map(|a| {
            let rec = corpus.get(a.set.anchor).ok_or(Error::UnknownDocument(a.set.anchor))?;
            let query: Vec<&str> = document_tokens(rec).collect();
            bm25_rank(&query, a, index, corpus)
        })
        .collect()
}
