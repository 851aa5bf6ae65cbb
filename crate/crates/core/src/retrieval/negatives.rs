//! Hard-negative selection from similar duplicate buckets.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;

use super::buckets::{Bucket, SimilarityMatrix};
use crate::corpus::{Corpus, QuestionId, QuestionRecord};
use crate::error::{Error, Result};

pub fn tag_jaccard(a: &QuestionRecord, b: &QuestionRecord) -> f64 {
    let sa: BTreeSet<&str> = a.tags.iter().map(String::as_str).collect();
    let sb: BTreeSet<&str> = b.tags.iter().map(String::as_str).collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeChoice {
    /// Highest tag overlap among answered members of similar buckets.
    Hard(QuestionId),
    /// Uniform draw from the fallback pool.
    Fallback(QuestionId),
}

impl NegativeChoice {
    pub fn id(self) -> QuestionId {
        match self {
            NegativeChoice::Hard(id) | NegativeChoice::Fallback(id) => id,
        }
    }
}

pub struct NegativeSampler<'a> {
    buckets: &'a [Bucket],
    similarity: &'a SimilarityMatrix,
    corpus: &'a Corpus,
    bucket_of: HashMap<QuestionId, usize>,
    alpha: f64,
    fallback_pool: Vec<QuestionId>,
}

impl<'a> NegativeSampler<'a> {
    /// `fallback_pool` lists the training questions eligible for random
    /// negatives; unanswered ones are filtered out here.
    pub fn new(
        buckets: &'a [Bucket],
        similarity: &'a SimilarityMatrix,
        corpus: &'a Corpus,
        alpha: f64,
        fallback_pool: impl IntoIterator<Item = QuestionId>,
    ) -> Self {
        let bucket_of = buckets
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.members.iter().map(move |&m| (m, i)))
            .collect();
        let mut pool: Vec<QuestionId> = fallback_pool
            .into_iter()
            .filter(|&id| corpus.get(id).is_some_and(QuestionRecord::is_answered))
            .collect();
        pool.sort_unstable();
        pool.dedup();
        Self {
            buckets,
            similarity,
            corpus,
            bucket_of,
            alpha,
            fallback_pool: pool,
        }
    }

    pub fn bucket_of(&self, id: QuestionId) -> Option<usize> {
        self.bucket_of.get(&id).copied()
    }

    /// Scan every bucket whose similarity to the anchor's bucket exceeds
    /// alpha (most similar first), and return the answered member with the
    /// largest tag Jaccard against the anchor. Ties prefer the more similar
    /// bucket, then the smaller id.
    pub fn hardest(&self, anchor: QuestionId) -> Option<QuestionId> {
        let home = self.bucket_of(anchor)?;
        let anchor_rec = self.corpus.get(anchor)?;
        let mut ordered: Vec<(usize, f64)> = (0..self.buckets.len())
            .filter(|&k| k != home)
            .map(|k| (k, self.similarity.get(home, k)))
            .filter(|&(_, s)| s > self.alpha)
            .collect();
        ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut best: Option<(f64, f64, QuestionId)> = None;
        for (k, sim) in ordered {
            for &q in &self.buckets[k].members {
                let Some(rec) = self.corpus.get(q) else { continue };
                if !rec.is_answered() {
                    continue;
                }
                let overlap = tag_jaccard(anchor_rec, rec);
                let better = match best {
                    None => true,
                    Some((bo, bs, bq)) => {
                        overlap > bo || (overlap == bo && (sim > bs || (sim == bs && q < bq)))
                    }
                };
                if better {
                    best = Some((overlap, sim, q));
                }
            }
        }
        best.map(|(_, _, q)| q)
    }

    /// Uniform answered question from the fallback pool outside the
    /// anchor's bucket.
    pub fn fallback<R: Rng>(&self, anchor: QuestionId, rng: &mut R) -> Result<QuestionId> {
        let home = self.bucket_of(anchor);
        let excluded = |q: QuestionId| q == anchor || (home.is_some() && self.bucket_of(q) == home);
        if !self.fallback_pool.is_empty() {
            for _ in 0..64 {
                let q = self.fallback_pool[rng.random_range(0..self.fallback_pool.len())];
                if !excluded(q) {
                    return Ok(q);
                }
            }
        }
        let eligible: Vec<QuestionId> = self
            .fallback_pool
            .iter()
            .copied()
            .filter(|&q| !excluded(q))
            .collect();
        if eligible.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no answered training question outside the bucket of {anchor}"
            )));
        }
        Ok(eligible[rng.random_range(0..eligible.len())])
    }

    pub fn sample<R: Rng>(&self, anchor: QuestionId, rng: &mut R) -> Result<NegativeChoice> {
        match self.hardest(anchor) {
            Some(q) => Ok(NegativeChoice::Hard(q)),
            None => self.fallback(anchor, rng).map(NegativeChoice::Fallback),
        }
    }
}
