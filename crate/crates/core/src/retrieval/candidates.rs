//! Candidate sets: older, answered questions with overlapping tags and a
//! similar title.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::negatives::tag_jaccard;
use crate::corpus::{Corpus, QuestionId, QuestionRecord};
use crate::error::{Error, Result};
use crate::features::{cosine, QuestionFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: QuestionId,
    pub tag_jaccard: f64,
    pub title_cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub anchor: QuestionId,
    /// Ascending by id.
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn contains(&self, id: QuestionId) -> bool {
        self.candidates.binary_search_by_key(&id, |c| c.id).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateFilter {
    /// Tag Jaccard must be strictly above this.
    pub tag_jaccard_min: f64,
    /// Title cosine must be at least this.
    pub title_cosine_min: f64,
}

impl Default for CandidateFilter {
    fn default() -> Self {
        Self {
            tag_jaccard_min: 0.15,
            title_cosine_min: 0.27,
        }
    }
}

pub struct CandidateGenerator<'a> {
    corpus: &'a Corpus,
    features: &'a QuestionFeatures,
    filter: CandidateFilter,
    by_tag: HashMap<&'a str, Vec<usize>>,
}

impl<'a> CandidateGenerator<'a> {
    pub fn new(corpus: &'a Corpus, features: &'a QuestionFeatures, filter: CandidateFilter) -> Self {
        let mut by_tag: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, r) in corpus.records().iter().enumerate() {
            for t in &r.tags {
                let list = by_tag.entry(t.as_str()).or_default();
                if list.last() != Some(&i) {
                    list.push(i);
                }
            }
        }
        Self {
            corpus,
            features,
            filter,
            by_tag,
        }
    }

    pub fn generate(&self, anchor: QuestionId) -> Result<CandidateSet> {
        let record = self.corpus.get(anchor).ok_or(Error::UnknownDocument(anchor))?;
        let title = self.features.title(anchor).ok_or(Error::UnknownDocument(anchor))?;
        Ok(self.generate_for(record, title))
    }

    /// Candidates for a record that need not be part of the corpus, given
    /// its encoder title vector.
    pub fn generate_for(&self, anchor: &QuestionRecord, anchor_title: &[f64]) -> CandidateSet {
        let mut pool: Vec<usize> = anchor
            .tags
            .iter()
            .filter_map(|t| self.by_tag.get(t.as_str()))
            .flatten()
            .copied()
            .collect();
        pool.sort_unstable();
        pool.dedup();
        let records = self.corpus.records();
        let candidates = pool
            .into_iter()
            .map(|i| &records[i])
            .filter(|r| r.id != anchor.id && r.created_at < anchor.created_at)
            .filter_map(|r| {
                let j = tag_jaccard(anchor, r);
                if j <= self.filter.tag_jaccard_min || !r.is_answered() {
                    return None;
                }
                let c = cosine(anchor_title, self.features.title(r.id)?);
                (c >= self.filter.title_cosine_min).then_some(Candidate {
                    id: r.id,
                    tag_jaccard: j,
                    title_cosine: c,
                })
            })
            .collect();
        CandidateSet {
            anchor: anchor.id,
            candidates,
        }
    }

    /// One set per anchor, in input order.
    pub fn generate_many(&self, anchors: &[QuestionId]) -> Result<Vec<CandidateSet>> {
        anchors.par_iter().map(|&a| self.generate(a)).collect()
    }
}

/// A test or validation anchor with its candidate set and gold masters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalAnchor {
    pub set: CandidateSet,
    pub gold: Vec<QuestionId>,
}

impl EvalAnchor {
    pub fn gold_present(&self) -> bool {
        self.gold.iter().any(|&g| self.set.contains(g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{body_key, title_key, EmbeddingStore, PrecomputedEncoder};
    use crate::features::FeatureMode;
    use chrono::{TimeZone, Utc};

    fn rec(id: u64, day: u32, tags: &[&str], answers: u32) -> QuestionRecord {
        QuestionRecord {
            id,
            title_raw: String::new(),
            body_raw: String::new(),
            title_tokens: vec![],
            body_tokens: vec![],
            tags: tags.iter().map(|t| t.to_string()).collect(),
            created_at: Utc.with_ymd_and_hms(2015, 1, day, 0, 0, 0).unwrap(),
            answer_count: answers,
        }
    }

    fn features(records: &[QuestionRecord], titles: &[(u64, [f64; 2])]) -> QuestionFeatures {
        let mut store = EmbeddingStore::new(2).unwrap();
        for (id, t) in titles {
            store.insert(title_key(*id), t).unwrap();
            store.insert(body_key(*id), &[0.0, 0.0]).unwrap();
        }
        let enc = PrecomputedEncoder::new(store);
        QuestionFeatures::build(records, &enc, None, FeatureMode::Text).unwrap()
    }

    #[test]
    fn filters_apply() {
        // cos((1,0), (1,1.732)) = 0.5; cos((1,0),(0.2,1)) ≈ 0.196
        let records = vec![
            rec(1, 10, &["a", "b"], 0),
            rec(2, 1, &["a", "b", "c"], 1),
            rec(3, 20, &["a", "b"], 1),
            rec(4, 2, &["a", "b"], 0),
            rec(5, 3, &["a", "x", "y", "z", "w", "v"], 1),
            rec(6, 4, &["a", "b"], 2),
            rec(7, 5, &["q"], 1),
        ];
        let titles = [
            (1, [1.0, 0.0]),
            (2, [1.0, 1.732]),
            (3, [1.0, 0.0]),
            (4, [1.0, 0.0]),
            (5, [1.0, 0.0]),
            (6, [0.2, 1.0]),
            (7, [1.0, 0.0]),
        ];
        let f = features(&records, &titles);
        let corpus = Corpus::new(records);
        let g = CandidateGenerator::new(&corpus, &f, CandidateFilter::default());
        let set = g.generate(1).unwrap();
        // 2 in; 3 later; 4 unanswered; 5 Jaccard 1/7; 6 low cosine; 7 no shared tag.
        assert_eq!(set.candidates.len(), 1);
        let c = set.candidates[0];
        assert_eq!(c.id, 2);
        assert!((c.tag_jaccard - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.title_cosine - 0.5).abs() < 1e-4);
    }

    #[test]
    fn unknown_anchor_errors() {
        let records = vec![rec(1, 1, &["a"], 1)];
        let f = features(&records, &[(1, [1.0, 0.0])]);
        let corpus = Corpus::new(records);
        let g = CandidateGenerator::new(&corpus, &f, CandidateFilter::default());
        assert!(g.generate(99).is_err());
        assert!(g.generate(1).unwrap().is_empty());
    }
}
